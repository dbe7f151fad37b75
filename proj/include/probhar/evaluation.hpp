#pragma once

#include <array>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "probhar/domain.hpp"
#include "probhar/inference.hpp"
#include "probhar/segmentation.hpp"

namespace probhar {

struct EvalConfig {
  int top_k = 1;
  bool include_null = true;
  /// Under/overfill window: a prediction also counts when the predicted label
  /// is the truth of some instance of the same serial within this distance.
  double tolerance_seconds = 0.0;

  void validate() const {
    if (top_k < 1 || top_k > 3) throw Error(ErrorKind::invalid_config, "top_k must be in 1..3");
    if (!(tolerance_seconds >= 0.0)) throw Error(ErrorKind::invalid_config, "tolerance must be >= 0");
  }

  std::int64_t radius_instances() const {
    return static_cast<std::int64_t>(std::floor(tolerance_seconds * kInstancesPerSecond + 1e-9));
  }
};

/// Final segments back to one label per instance.
inline std::vector<LabeledInstance> expand_final(const std::vector<Segment>& segments) {
  std::vector<LabeledInstance> out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.length_instances <= 0) {
      throw Error(ErrorKind::gap_in_tiling, "segment at " + std::to_string(s.start_id.value) + " is empty");
    }
    if (i > 0 && segments[i - 1].serial == s.serial && segments[i - 1].end_id() != s.start_id.value) {
      throw Error(ErrorKind::gap_in_tiling, "segments of serial " + s.serial.render() + " do not tile at id " +
                                                std::to_string(s.start_id.value));
    }
    for (std::int64_t k = 0; k < s.length_instances; ++k) {
      out.push_back({InstanceId{s.start_id.value + k}, s.serial,
                     s.t_start + static_cast<double>(k) / kInstancesPerSecond, s.activity});
    }
  }
  return out;
}

inline bool is_null_label(Activity a) { return a == Activity::null; }
inline bool is_null_label(const std::string& code) { return code == "0000"; }

template <typename Label>
struct RankedLabels {
  InstanceId id;
  SerialCode serial;
  std::vector<Label> ranked;  // best first
};

template <typename Label>
struct TruthLabel {
  InstanceId id;
  SerialCode serial;
  Label label{};
};

namespace detail {

template <typename Truth>
std::unordered_map<std::int64_t, std::size_t> index_truth(const std::vector<Truth>& truth) {
  std::unordered_map<std::int64_t, std::size_t> idx;
  idx.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!idx.emplace(truth[i].id.value, i).second) {
      throw Error(ErrorKind::instance_mismatch, "duplicate truth instance " + std::to_string(truth[i].id.value));
    }
  }
  return idx;
}

/// Truth ordered by id; does any instance within `radius` ids of position
/// `at` (same serial) carry `label`?
template <typename Truth, typename Label>
bool label_within(const std::vector<Truth>& truth, std::size_t at, std::int64_t radius, const Label& label,
                  Label Truth::*field) {
  const auto& centre = truth[at];
  if (centre.*field == label) return true;
  for (std::size_t j = at; j-- > 0;) {
    if (truth[j].serial != centre.serial || centre.id.value - truth[j].id.value > radius) break;
    if (truth[j].*field == label) return true;
  }
  for (std::size_t j = at + 1; j < truth.size(); ++j) {
    if (truth[j].serial != centre.serial || truth[j].id.value - centre.id.value > radius) break;
    if (truth[j].*field == label) return true;
  }
  return false;
}

template <typename Truth>
std::vector<Truth> sorted_by_id(std::vector<Truth> v) {
  std::sort(v.begin(), v.end(), [](const Truth& a, const Truth& b) { return a.id < b.id; });
  return v;
}

}  // namespace detail

/// Fraction of instances whose truth appears among the top-k predictions,
/// with the tolerance window applied. With include_null off, instances whose
/// truth is null leave the denominator.
template <typename Label>
double hit_rate(const std::vector<RankedLabels<Label>>& preds, const std::vector<TruthLabel<Label>>& truth_in,
                const EvalConfig& cfg) {
  cfg.validate();
  if (preds.size() != truth_in.size()) {
    throw Error(ErrorKind::instance_mismatch, "predictions and truth differ in size");
  }
  const auto truth = detail::sorted_by_id(truth_in);
  const auto idx = detail::index_truth(truth);
  const auto radius = cfg.radius_instances();
  std::size_t hits = 0;
  std::size_t counted = 0;
  for (const auto& p : preds) {
    auto it = idx.find(p.id.value);
    if (it == idx.end()) {
      throw Error(ErrorKind::instance_mismatch, "no truth for instance " + std::to_string(p.id.value));
    }
    const auto& t = truth[it->second];
    if (!cfg.include_null && is_null_label(t.label)) continue;
    ++counted;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_k), p.ranked.size());
    for (std::size_t r = 0; r < k; ++r) {
      if (detail::label_within(truth, it->second, radius, p.ranked[r], &TruthLabel<Label>::label)) {
        ++hits;
        break;
      }
    }
  }
  return counted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

inline constexpr std::array<Activity, kActivityCount + 1> kLabelClasses = {
    Activity::null,         Activity::relax,   Activity::coffee_time,
    Activity::early_morning, Activity::cleanup, Activity::sandwich_time};

inline std::size_t class_index(Activity a) { return a == Activity::null ? 0 : index_of(a) + 1; }

struct ActivityMetrics {
  Activity activity = Activity::null;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::array<double, 3> hit_rate{};  // top-1, top-2, top-3
  std::vector<ActivityMetrics> per_activity;
  double weighted_f = 0.0;
  /// Rows: truth after the tolerance window; columns: prediction.
  /// Class order: null, 101..105.
  std::array<std::array<std::size_t, kActivityCount + 1>, kActivityCount + 1> confusion{};
};

inline double f_measure(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

/// Per-activity precision, recall and F after the tolerance window: a
/// prediction found in the window is scored against itself, anything else
/// against the instance's own truth. Weighted F uses raw truth support.
inline MetricsReport f_scores(const std::vector<LabeledInstance>& preds, const std::vector<LabeledInstance>& truth_in,
                              const EvalConfig& cfg) {
  cfg.validate();
  if (preds.size() != truth_in.size()) {
    throw Error(ErrorKind::instance_mismatch, "predictions and truth differ in size");
  }
  const auto truth = detail::sorted_by_id(truth_in);
  const auto idx = detail::index_truth(truth);
  const auto radius = cfg.radius_instances();
  MetricsReport report;
  std::array<std::size_t, kActivityCount + 1> support{};
  for (const auto& p : preds) {
    auto it = idx.find(p.id.value);
    if (it == idx.end()) {
      throw Error(ErrorKind::instance_mismatch, "no truth for instance " + std::to_string(p.id.value));
    }
    const auto& t = truth[it->second];
    if (!cfg.include_null && t.activity == Activity::null) continue;
    ++support[class_index(t.activity)];
    const bool in_window = detail::label_within(truth, it->second, radius, p.activity, &LabeledInstance::activity);
    const Activity effective = in_window ? p.activity : t.activity;
    ++report.confusion[class_index(effective)][class_index(p.activity)];
  }

  std::size_t total_support = 0;
  double weighted = 0.0;
  for (Activity a : kLabelClasses) {
    if (a == Activity::null && !cfg.include_null) continue;
    const auto c = class_index(a);
    std::size_t tp = report.confusion[c][c];
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t k = 0; k < kLabelClasses.size(); ++k) {
      predicted += report.confusion[k][c];
      actual += report.confusion[c][k];
    }
    ActivityMetrics m;
    m.activity = a;
    m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    m.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
    m.f = f_measure(m.precision, m.recall);
    m.support = support[c];
    total_support += m.support;
    weighted += m.f * static_cast<double>(m.support);
    report.per_activity.push_back(m);
  }
  report.weighted_f = total_support == 0 ? 0.0 : weighted / static_cast<double>(total_support);
  return report;
}

inline std::vector<RankedLabels<Activity>> ranked_labels_of(const PredictionTable& preds) {
  std::vector<RankedLabels<Activity>> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    RankedLabels<Activity> r{p.instance, p.serial, {}};
    for (const auto& ra : p.prediction.ranked) {
      if (ra.score > 0.0) r.ranked.push_back(ra.activity);
    }
    if (r.ranked.empty()) r.ranked.push_back(Activity::null);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TruthLabel<Activity>> truth_labels_of(const std::vector<LabeledInstance>& truth) {
  std::vector<TruthLabel<Activity>> out;
  out.reserve(truth.size());
  for (const auto& t : truth) out.push_back({t.id, t.serial, t.activity});
  return out;
}

/// Hit rates (k = 1..3) from the ranked per-instance predictions plus the
/// F-scores of the final timeline, both against the same truth.
inline MetricsReport evaluate(const PredictionTable& preds, const std::vector<Segment>& final_segments,
                              const std::vector<LabeledInstance>& truth, const EvalConfig& cfg) {
  auto report = f_scores(expand_final(final_segments), truth, cfg);
  const auto ranked = ranked_labels_of(preds);
  const auto truth_labels = truth_labels_of(truth);
  for (int k = 1; k <= 3; ++k) {
    auto c = cfg;
    c.top_k = k;
    report.hit_rate[static_cast<std::size_t>(k - 1)] = hit_rate(ranked, truth_labels, c);
  }
  return report;
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json doc;
  doc["hit_rate"] = {{"k1", r.hit_rate[0]}, {"k2", r.hit_rate[1]}, {"k3", r.hit_rate[2]}};
  auto& per = doc["per_activity"] = nlohmann::json::array();
  for (const auto& m : r.per_activity) {
    per.push_back({{"code", code_of(m.activity)}, {"precision", m.precision}, {"recall", m.recall}, {"f", m.f}});
  }
  doc["weighted_f"] = r.weighted_f;
  auto& conf = doc["confusion"] = nlohmann::json::array();
  for (const auto& row : r.confusion) conf.push_back(row);
  return doc;
}

}  // namespace probhar
