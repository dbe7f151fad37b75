#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "probhar/domain.hpp"
#include "probhar/inference.hpp"
#include "probhar/relstore.hpp"

namespace probhar {

struct LabeledInstance {
  InstanceId id;
  SerialCode serial;
  double t_start = 0.0;
  Activity activity = Activity::null;
};

/// A run of instances sharing one high-level activity.
struct Segment {
  InstanceId start_id;
  SerialCode serial;
  double t_start = 0.0;
  Activity activity = Activity::null;
  std::int64_t length_instances = 0;

  double length_seconds() const { return static_cast<double>(length_instances) / kInstancesPerSecond; }
  std::int64_t end_id() const { return start_id.value + length_instances; }  // exclusive

  friend bool operator==(const Segment&, const Segment&) = default;
};

inline std::vector<LabeledInstance> labels_of(const PredictionTable& preds) {
  std::vector<LabeledInstance> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back({p.instance, p.serial, p.t_start, p.prediction.winner});
  return out;
}

/// Collapses runs of equal activity. A segment's length is the distance to
/// the next segment's start; the last one runs to the serial's final id.
inline std::vector<Segment> rearrange(const std::vector<LabeledInstance>& labels) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    const bool same_serial = !out.empty() && out.back().serial == l.serial;
    if (same_serial) out.back().length_instances = l.id.value - out.back().start_id.value;
    if (same_serial && out.back().activity == l.activity) {
      out.back().length_instances = l.id.value - out.back().start_id.value + 1;
      continue;
    }
    out.push_back({l.id, l.serial, l.t_start, l.activity, 1});
  }
  return out;
}

/// Merges adjacent segments with equal activity in the same serial.
inline std::vector<Segment> rearrange(const std::vector<Segment>& segments) {
  std::vector<Segment> out;
  for (const auto& s : segments) {
    if (!out.empty() && out.back().serial == s.serial && out.back().activity == s.activity) {
      out.back().length_instances = s.end_id() - out.back().start_id.value;
      continue;
    }
    out.push_back(s);
  }
  return out;
}

enum class LengthUnit { instances, seconds };

struct EliminationConfig {
  std::vector<double> thresholds{15, 35, 55};
  LengthUnit unit = LengthUnit::instances;

  void validate() const {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (thresholds[i] <= 0 || (i > 0 && thresholds[i] <= thresholds[i - 1])) {
        throw Error(ErrorKind::invalid_config, "elimination thresholds must be positive and increasing");
      }
    }
  }
};

namespace detail {

inline double length_in(const Segment& s, LengthUnit unit) {
  return unit == LengthUnit::instances ? static_cast<double>(s.length_instances) : s.length_seconds();
}

/// Segments of one serial, already rearranged.
inline std::vector<Segment> eliminate_serial(std::vector<Segment> segs, const EliminationConfig& cfg) {
  if (segs.empty()) return segs;
  const InstanceId serial_start = segs.front().start_id;
  const double serial_t = segs.front().t_start;
  const std::int64_t serial_end = segs.back().end_id();
  for (double threshold : cfg.thresholds) {
    std::vector<Segment> kept;
    for (const auto& s : segs) {
      if (length_in(s, cfg.unit) >= threshold) kept.push_back(s);
    }
    if (kept.empty()) {
      // Degenerate: nothing survives. Keep the longest (earliest on ties)
      // spanning the whole serial and stop.
      auto longest = *std::max_element(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
        return a.length_instances < b.length_instances;
      });
      longest.start_id = serial_start;
      longest.t_start = serial_t;
      longest.length_instances = serial_end - serial_start.value;
      return {longest};
    }
    // A deleted span belongs to the surviving segment before it; a leading
    // deleted span belongs to the first survivor.
    kept.front().start_id = serial_start;
    kept.front().t_start = serial_t;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const std::int64_t end = i + 1 < kept.size() ? kept[i + 1].start_id.value : serial_end;
      kept[i].length_instances = end - kept[i].start_id.value;
    }
    segs = rearrange(kept);
  }
  return segs;
}

}  // namespace detail

/// Repeatedly deletes segments shorter than each threshold in turn, letting
/// neighbours absorb the freed span and re-merging equal neighbours.
inline std::vector<Segment> three_step_eliminate(const std::vector<Segment>& segments,
                                                 const EliminationConfig& cfg = {}) {
  cfg.validate();
  const auto merged = rearrange(segments);
  std::vector<Segment> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= merged.size(); ++i) {
    if (i == merged.size() || merged[i].serial != merged[begin].serial) {
      std::vector<Segment> serial(merged.begin() + static_cast<std::ptrdiff_t>(begin),
                                  merged.begin() + static_cast<std::ptrdiff_t>(i));
      for (auto& s : detail::eliminate_serial(std::move(serial), cfg)) out.push_back(s);
      begin = i;
    }
  }
  return out;
}

// Columns: serial, start_id, t_start, activity, length_instances, length_seconds.
inline Schema final_schema() {
  return Schema{{"serial", ColumnType::integer},           {"start_id", ColumnType::integer},
                {"t_start", ColumnType::real},             {"activity", ColumnType::integer},
                {"length_instances", ColumnType::integer}, {"length_seconds", ColumnType::real}};
}

inline ProbRelation final_relation(const std::vector<Segment>& segments, std::string name = "final") {
  ProbRelation rel(std::move(name), final_schema());
  std::vector<Row> rows;
  rows.reserve(segments.size());
  for (const auto& s : segments) {
    rows.push_back({Value{std::int64_t{s.serial.value()}}, Value{s.start_id.value}, Value{s.t_start},
                    Value{std::int64_t{code_of(s.activity)}}, Value{s.length_instances},
                    Value{s.length_seconds()}});
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

inline std::vector<Segment> segments_from(const ProbRelation& rel) {
  const auto serial = rel.column("serial");
  const auto start = rel.column("start_id");
  const auto t = rel.column("t_start");
  const auto act = rel.column("activity");
  const auto len = rel.column("length_instances");
  std::vector<Segment> out;
  out.reserve(rel.size());
  for (const auto& row : rel.rows()) {
    out.push_back({InstanceId{as_int(row[start])}, SerialCode::from_int(as_int(row[serial])), as_real(row[t]),
                   activity_from_code(as_int(row[act])), as_int(row[len])});
  }
  std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) { return a.start_id < b.start_id; });
  return out;
}

}  // namespace probhar
