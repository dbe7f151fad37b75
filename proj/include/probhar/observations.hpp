#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "probhar/domain.hpp"
#include "probhar/relstore.hpp"

namespace probhar {

/// One 1/3 s instance with its LAP and BHO candidate sets.
struct Observation {
  InstanceId id;
  SerialCode serial;
  double t_start = 0.0;
  CandidateSet lap;
  CandidateSet bho;

  CandidateSet& of(Property p) { return p == Property::lap ? lap : bho; }
  const CandidateSet& of(Property p) const { return p == Property::lap ? lap : bho; }
};

/// Ordered by instance id.
using ObservationTable = std::vector<Observation>;

inline Observation make_observation(InstanceId id, SerialCode serial, double t_start) {
  Observation o{id, serial, t_start, {}, {}};
  o.lap.instance = id;
  o.lap.property = Property::lap;
  o.bho.instance = id;
  o.bho.property = Property::bho;
  return o;
}

inline Schema instance_schema() {
  return Schema{{"instance_id", ColumnType::integer},
                {"serial", ColumnType::integer},
                {"t_start", ColumnType::real}};
}

inline Schema candidate_schema() {
  return Schema{{"instance_id", ColumnType::integer}, {"serial", ColumnType::integer},
                {"t_start", ColumnType::real},        {"property", ColumnType::text},
                {"code", ColumnType::text},           {"pr", ColumnType::probability}};
}

inline ProbRelation instances_relation(const ObservationTable& obs, std::string name = "instances") {
  ProbRelation rel(std::move(name), instance_schema());
  std::vector<Row> rows;
  rows.reserve(obs.size());
  for (const auto& o : obs) {
    rows.push_back({Value{o.id.value}, Value{std::int64_t{o.serial.value()}}, Value{o.t_start}});
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

inline ProbRelation candidates_relation(const ObservationTable& obs, std::string name = "candidates") {
  ProbRelation rel(std::move(name), candidate_schema(), {"instance_id", "property"});
  std::vector<Row> rows;
  rows.reserve(obs.size() * 4);
  for (const auto& o : obs) {
    for (Property p : {Property::lap, Property::bho}) {
      for (const auto& c : o.of(p).candidates) {
        rows.push_back({Value{o.id.value}, Value{std::int64_t{o.serial.value()}}, Value{o.t_start},
                        Value{std::string(to_string(p))}, Value{c.value}, Value{c.p}});
      }
    }
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

/// Rebuilds the typed table. Every instance listed in `instances` appears,
/// with candidates ordered most probable first.
inline ObservationTable observations_from(const ProbRelation& instances, const ProbRelation& candidates) {
  std::map<std::int64_t, Observation> by_id;
  const auto id_col = instances.column("instance_id");
  const auto serial_col = instances.column("serial");
  const auto t_col = instances.column("t_start");
  for (const auto& row : instances.rows()) {
    InstanceId id{as_int(row[id_col])};
    by_id.emplace(id.value, make_observation(id, SerialCode::from_int(as_int(row[serial_col])),
                                             as_real(row[t_col])));
  }
  const auto cid = candidates.column("instance_id");
  const auto cprop = candidates.column("property");
  const auto ccode = candidates.column("code");
  const auto cpr = candidates.column("pr");
  for (const auto& row : candidates.rows()) {
    auto it = by_id.find(as_int(row[cid]));
    if (it == by_id.end()) {
      throw Error(ErrorKind::instance_mismatch,
                  "candidate for unknown instance " + std::to_string(as_int(row[cid])));
    }
    const Property p = parse_property(as_text(row[cprop]));
    validate_code(p, as_text(row[ccode]));
    it->second.of(p).candidates.push_back({as_text(row[ccode]), as_real(row[cpr])});
  }
  ObservationTable out;
  out.reserve(by_id.size());
  for (auto& [id, o] : by_id) {
    std::sort(o.lap.candidates.begin(), o.lap.candidates.end(), candidate_order);
    std::sort(o.bho.candidates.begin(), o.bho.candidates.end(), candidate_order);
    out.push_back(std::move(o));
  }
  return out;
}

/// Applies prune_candidates to every set in the table.
inline ObservationTable prune_all(ObservationTable obs, const PruneOptions& opts = {}) {
  for (auto& o : obs) {
    o.lap.candidates = prune_candidates(std::move(o.lap.candidates), opts);
    o.bho.candidates = prune_candidates(std::move(o.bho.candidates), opts);
  }
  return obs;
}

/// Half-open index ranges of consecutive observations sharing a serial.
inline std::vector<std::pair<std::size_t, std::size_t>> serial_ranges(const ObservationTable& obs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= obs.size(); ++i) {
    if (i == obs.size() || obs[i].serial != obs[begin].serial) {
      if (i > begin) out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

/// Training label: the deterministic BHO code and the high-level activity.
struct TrainingLabel {
  InstanceId id;
  Activity activity = Activity::null;
  std::string bho = "0000";
};

/// Per-instance ground truth kept by the synthetic generator.
struct TruthRow {
  InstanceId id;
  SerialCode serial;
  double t_start = 0.0;
  Activity activity = Activity::null;
  std::string lap = "0000";
  std::string bho = "0000";
};

inline ProbRelation training_relation(const std::vector<TrainingLabel>& labels,
                                      std::string name = "training_labels") {
  ProbRelation rel(std::move(name), Schema{{"instance_id", ColumnType::integer},
                                           {"activity", ColumnType::integer},
                                           {"bho", ColumnType::text}});
  std::vector<Row> rows;
  rows.reserve(labels.size());
  for (const auto& l : labels) {
    rows.push_back({Value{l.id.value}, Value{std::int64_t{code_of(l.activity)}}, Value{l.bho}});
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

inline std::vector<TrainingLabel> training_labels_from(const ProbRelation& rel) {
  const auto id = rel.column("instance_id");
  const auto act = rel.column("activity");
  const auto bho = rel.column("bho");
  std::vector<TrainingLabel> out;
  out.reserve(rel.size());
  for (const auto& row : rel.rows()) {
    validate_code(Property::bho, as_text(row[bho]));
    out.push_back({InstanceId{as_int(row[id])}, activity_from_code(as_int(row[act])), as_text(row[bho])});
  }
  return out;
}

/// Ground-truth labels file: (instance_id, activity).
inline ProbRelation truth_labels_relation(const std::vector<TruthRow>& truth, std::string name = "labels") {
  ProbRelation rel(std::move(name),
                   Schema{{"instance_id", ColumnType::integer}, {"activity", ColumnType::integer}});
  std::vector<Row> rows;
  rows.reserve(truth.size());
  for (const auto& t : truth) rows.push_back({Value{t.id.value}, Value{std::int64_t{code_of(t.activity)}}});
  rel.insert_rows(std::move(rows));
  return rel;
}

}  // namespace probhar
