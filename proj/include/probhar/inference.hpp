#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "probhar/axioms.hpp"
#include "probhar/domain.hpp"
#include "probhar/observations.hpp"
#include "probhar/relstore.hpp"

namespace probhar {

/// Per-activity channel weights: m scales BHO evidence, n scales LAP evidence.
struct FusionWeights {
  ActivityVector m{0.7, 0.5, 0.5, 0.7, 0.5};
  ActivityVector n{0.7, 0.7, 0.4, 0.9, 0.6};

  static FusionWeights uniform(double w = 1.0) {
    FusionWeights out;
    out.m.fill(w);
    out.n.fill(w);
    return out;
  }

  void validate() const {
    for (std::size_t a = 0; a < kActivityCount; ++a) {
      if (!is_probability(m[a]) || !is_probability(n[a])) {
        throw Error(ErrorKind::invalid_config, "fusion weights must lie in [0,1]");
      }
    }
  }
};

/// Weighted noisy-OR of two independent evidence channels.
inline double fuse(double p_bho, double p_lap, double m, double n) {
  return 1.0 - (1.0 - m * p_bho) * (1.0 - n * p_lap);
}

/// One (BHO candidate, LAP candidate) pairing. Either side may be absent.
struct ItemScore {
  InstanceId instance;
  std::optional<Candidate> bho;
  std::optional<Candidate> lap;
  ActivityVector lap_evidence{};  // L
  ActivityVector bho_evidence{};  // B
  ActivityVector total{};         // T
};

struct InferenceOptions {
  /// Only pair present BHO and LAP candidates (no one-sided items).
  bool strict_pairs = false;
};

namespace detail {

inline ActivityVector evidence(const std::optional<Candidate>& cand, const AxiomTable& axioms) {
  ActivityVector out{};
  if (!cand) return out;
  const AxiomRow* row = axioms.find(cand->value);
  if (!row) return out;  // unseen code: no evidence either way
  for (std::size_t a = 0; a < kActivityCount; ++a) out[a] = cand->p * row->p[a];
  return out;
}

}  // namespace detail

/// Items are enumerated BHO-major: (b0,l0), (b0,l1), ..., (b0,-), (b1,l0), ...,
/// then (-,l0), (-,l1), ...
inline std::vector<ItemScore> score_instance(const CandidateSet& bho, const CandidateSet& lap,
                                             const AxiomTable& bho_axioms, const AxiomTable& lap_axioms,
                                             const FusionWeights& w, const InferenceOptions& opts = {}) {
  std::vector<std::optional<Candidate>> bho_side(bho.candidates.begin(), bho.candidates.end());
  std::vector<std::optional<Candidate>> lap_side(lap.candidates.begin(), lap.candidates.end());
  if (!opts.strict_pairs) {
    bho_side.emplace_back(std::nullopt);
    lap_side.emplace_back(std::nullopt);
  }
  std::vector<ActivityVector> lap_ev;
  lap_ev.reserve(lap_side.size());
  for (const auto& l : lap_side) lap_ev.push_back(detail::evidence(l, lap_axioms));

  std::vector<ItemScore> items;
  items.reserve(bho_side.size() * lap_side.size());
  for (const auto& b : bho_side) {
    const auto bho_ev = detail::evidence(b, bho_axioms);
    for (std::size_t j = 0; j < lap_side.size(); ++j) {
      const auto& l = lap_side[j];
      if (!b && !l) continue;
      ItemScore item{bho.instance, b, l, lap_ev[j], bho_ev, {}};
      for (std::size_t a = 0; a < kActivityCount; ++a) {
        item.total[a] = fuse(bho_ev[a], lap_ev[j][a], w.m[a], w.n[a]);
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

struct RankedActivity {
  Activity activity = Activity::null;
  double score = 0.0;
};

struct InstancePrediction {
  InstanceId instance;
  std::array<RankedActivity, kActivityCount> ranked{};  // descending score
  Activity winner = Activity::null;

  ActivityVector scores() const {
    ActivityVector out{};
    for (const auto& r : ranked) out[index_of(r.activity)] = r.score;
    return out;
  }
};

/// Per activity, the best item wins; the instance's label is the activity
/// with the highest such score. No positive evidence yields the null label.
inline InstancePrediction predict_instance(InstanceId instance, const std::vector<ItemScore>& items) {
  ActivityVector best{};
  for (const auto& item : items) {
    for (std::size_t a = 0; a < kActivityCount; ++a) best[a] = std::max(best[a], item.total[a]);
  }
  InstancePrediction out;
  out.instance = instance;
  for (std::size_t a = 0; a < kActivityCount; ++a) out.ranked[a] = {kActivities[a], best[a]};
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const RankedActivity& x, const RankedActivity& y) { return x.score > y.score; });
  out.winner = out.ranked[0].score > 0.0 ? out.ranked[0].activity : Activity::null;
  return out;
}

inline InstancePrediction predict_instance(const std::vector<ItemScore>& items) {
  return predict_instance(items.empty() ? InstanceId{} : items.front().instance, items);
}

struct PredictionRow {
  InstanceId instance;
  SerialCode serial;
  double t_start = 0.0;
  InstancePrediction prediction;
};

using PredictionTable = std::vector<PredictionRow>;

inline PredictionTable predict_all(const ObservationTable& obs, const AxiomTable& bho_axioms,
                                   const AxiomTable& lap_axioms, const FusionWeights& w,
                                   const InferenceOptions& opts = {}) {
  w.validate();
  PredictionTable out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    const auto items = score_instance(o.bho, o.lap, bho_axioms, lap_axioms, w, opts);
    out.push_back({o.id, o.serial, o.t_start, predict_instance(o.id, items)});
  }
  return out;
}

// Columns: instance_id, serial, t_start, winner, score101..score105.
inline Schema prediction_schema() {
  std::vector<Column> cols{{"instance_id", ColumnType::integer},
                           {"serial", ColumnType::integer},
                           {"t_start", ColumnType::real},
                           {"winner", ColumnType::integer}};
  for (std::size_t a = 0; a < kActivityCount; ++a) {
    cols.push_back({"score" + std::to_string(101 + a), ColumnType::real});
  }
  return Schema(std::move(cols));
}

inline ProbRelation predictions_relation(const PredictionTable& preds, std::string name = "predictions") {
  ProbRelation rel(std::move(name), prediction_schema());
  std::vector<Row> rows;
  rows.reserve(preds.size());
  for (const auto& p : preds) {
    Row row{Value{p.instance.value}, Value{std::int64_t{p.serial.value()}}, Value{p.t_start},
            Value{std::int64_t{code_of(p.prediction.winner)}}};
    for (double s : p.prediction.scores()) row.emplace_back(s);
    rows.push_back(std::move(row));
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

/// Rebuilds rankings from the stored scores (ties by ascending activity code).
inline PredictionTable predictions_from(const ProbRelation& rel) {
  const auto id = rel.column("instance_id");
  const auto serial = rel.column("serial");
  const auto t = rel.column("t_start");
  const auto winner = rel.column("winner");
  const auto first_score = rel.column("score101");
  PredictionTable out;
  out.reserve(rel.size());
  for (const auto& row : rel.rows()) {
    PredictionRow p;
    p.instance = InstanceId{as_int(row[id])};
    p.serial = SerialCode::from_int(as_int(row[serial]));
    p.t_start = as_real(row[t]);
    p.prediction.instance = p.instance;
    for (std::size_t a = 0; a < kActivityCount; ++a) {
      p.prediction.ranked[a] = {kActivities[a], as_real(row[first_score + a])};
    }
    std::stable_sort(p.prediction.ranked.begin(), p.prediction.ranked.end(),
                     [](const RankedActivity& x, const RankedActivity& y) { return x.score > y.score; });
    p.prediction.winner = activity_from_code(as_int(row[winner]));
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PredictionRow& a, const PredictionRow& b) { return a.instance < b.instance; });
  return out;
}

}  // namespace probhar
