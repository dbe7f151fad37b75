#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "probhar/axioms.hpp"
#include "probhar/evaluation.hpp"
#include "probhar/inference.hpp"
#include "probhar/observations.hpp"
#include "probhar/relstore.hpp"
#include "probhar/scenario.hpp"
#include "probhar/segmentation.hpp"
#include "probhar/smoothing.hpp"

namespace probhar {

struct PipelineConfig {
  std::uint64_t seed = 42;
  std::string noise = "none";  // scenario noise profile: none | moderate
  int subjects = 4;

  bool smooth = true;
  int lap_half_width = 3;
  int bho_half_width = 5;
  bool bho_test_only = true;

  std::size_t prune_cap = 3;
  double prune_floor = 0.01;
  /// Keep only the most probable candidate per property before inference.
  bool first_choice_only = false;

  FusionWeights weights{};
  bool strict_pairs = false;

  bool eliminate = true;
  std::vector<double> thresholds{15, 35, 55};
  LengthUnit threshold_unit = LengthUnit::instances;

  double bho_tolerance = 1.0;
  double hl_tolerance = 30.0;
  bool include_null = true;

  PruneOptions prune() const { return {prune_floor, prune_cap}; }

  ScenarioConfig scenario() const {
    ScenarioConfig cfg = noise == "moderate" ? ScenarioConfig::moderate_noise(seed) : ScenarioConfig::zero_noise(seed);
    if (noise != "none" && noise != "moderate") throw Error(ErrorKind::invalid_config, "noise must be none or moderate");
    cfg.subjects = subjects;
    return cfg;
  }

  SmoothingConfig lap_smoothing() const { return {Property::lap, lap_half_width, false, false, prune()}; }
  SmoothingConfig bho_smoothing() const { return {Property::bho, bho_half_width, false, bho_test_only, prune()}; }
  EliminationConfig elimination() const { return {thresholds, threshold_unit}; }
  EvalConfig hl_eval() const { return {1, include_null, hl_tolerance}; }
  EvalConfig bho_eval() const { return {1, include_null, bho_tolerance}; }
};

namespace detail {

/// Numbers separated by commas and/or whitespace.
inline std::vector<double> parse_list(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  std::vector<double> out;
  std::istringstream ss(s);
  std::string item;
  while (ss >> item) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (*end != '\0') throw Error(ErrorKind::invalid_config, "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::invalid_config, "bad boolean '" + v + "'");
}

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    std::ostringstream s;
    s << v[i];
    out += s.str();
  }
  return out;
}

}  // namespace detail

/// Applies one key=value setting.
inline void set_option(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_list;
  auto number = [&] {
    auto v = parse_list(value);
    if (v.size() != 1) throw Error(ErrorKind::invalid_config, key + " takes one number");
    return v[0];
  };
  auto weights = [&](ActivityVector& target) {
    auto v = parse_list(value);
    if (v.size() != kActivityCount) throw Error(ErrorKind::invalid_config, key + " takes five weights");
    std::copy(v.begin(), v.end(), target.begin());
  };
  if (key == "seed") cfg.seed = static_cast<std::uint64_t>(number());
  else if (key == "noise") cfg.noise = value;
  else if (key == "subjects") cfg.subjects = static_cast<int>(number());
  else if (key == "smooth") cfg.smooth = parse_bool(value);
  else if (key == "lap_half_width") cfg.lap_half_width = static_cast<int>(number());
  else if (key == "bho_half_width") cfg.bho_half_width = static_cast<int>(number());
  else if (key == "bho_test_only") cfg.bho_test_only = parse_bool(value);
  else if (key == "prune_cap") cfg.prune_cap = static_cast<std::size_t>(number());
  else if (key == "prune_floor") cfg.prune_floor = number();
  else if (key == "first_choice_only") cfg.first_choice_only = parse_bool(value);
  else if (key == "weights_m") weights(cfg.weights.m);
  else if (key == "weights_n") weights(cfg.weights.n);
  else if (key == "strict_pairs") cfg.strict_pairs = parse_bool(value);
  else if (key == "eliminate") cfg.eliminate = parse_bool(value);
  else if (key == "thresholds") cfg.thresholds = parse_list(value);
  else if (key == "threshold_unit") {
    if (value == "instances") cfg.threshold_unit = LengthUnit::instances;
    else if (value == "seconds") cfg.threshold_unit = LengthUnit::seconds;
    else throw Error(ErrorKind::invalid_config, "threshold_unit must be instances or seconds");
  } else if (key == "bho_tolerance") cfg.bho_tolerance = number();
  else if (key == "hl_tolerance") cfg.hl_tolerance = number();
  else if (key == "include_null") cfg.include_null = parse_bool(value);
  else throw Error(ErrorKind::invalid_config, "unknown key '" + key + "'");
}

/// Flat UTF-8 key=value lines; '#' starts a comment; every key is optional.
inline PipelineConfig parse_config(std::istream& in, PipelineConfig cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::invalid_config, "line " + std::to_string(lineno) + ": expected key=value");
    }
    set_option(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot read config '" + path + "'");
  return parse_config(in);
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"seed", c.seed},
          {"noise", c.noise},
          {"subjects", c.subjects},
          {"smooth", c.smooth},
          {"lap_half_width", c.lap_half_width},
          {"bho_half_width", c.bho_half_width},
          {"bho_test_only", c.bho_test_only},
          {"prune_cap", c.prune_cap},
          {"prune_floor", c.prune_floor},
          {"first_choice_only", c.first_choice_only},
          {"weights_m", c.weights.m},
          {"weights_n", c.weights.n},
          {"strict_pairs", c.strict_pairs},
          {"eliminate", c.eliminate},
          {"thresholds", c.thresholds},
          {"threshold_unit", c.threshold_unit == LengthUnit::instances ? "instances" : "seconds"},
          {"bho_tolerance", c.bho_tolerance},
          {"hl_tolerance", c.hl_tolerance},
          {"include_null", c.include_null}};
}

/// Input of a run: candidates for every serial, labels for training serials
/// and, when known, the truth used for evaluation.
struct Dataset {
  ObservationTable observations;
  std::vector<TrainingLabel> training;
  std::vector<TruthRow> truth;
};

inline Dataset dataset_from(Scenario s) {
  return {std::move(s.observations), std::move(s.training), std::move(s.truth)};
}

struct StageTimer {
  std::map<std::string, double>& timings;
  std::string stage;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ~StageTimer() {
    timings[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

/// Smoothed candidates and the learned axiom tables.
struct Prepared {
  ObservationTable smoothed;
  ObservationTable raw;
  AxiomTable bho_axioms{Property::bho};
  AxiomTable lap_axioms{Property::lap};
  std::map<std::string, double> timings;
};

inline ObservationTable filter_serials(const ObservationTable& obs, bool test) {
  ObservationTable out;
  for (const auto& o : obs) {
    if (o.serial.is_test() == test) out.push_back(o);
  }
  return out;
}

inline ObservationTable first_choice(ObservationTable obs) {
  for (auto& o : obs) {
    if (o.lap.candidates.size() > 1) o.lap.candidates.resize(1);
    if (o.bho.candidates.size() > 1) o.bho.candidates.resize(1);
  }
  return obs;
}

/// Stores the candidates as base relations and derives the smoothed
/// relations through views, then learns both axiom tables from the
/// training serials.
inline Prepared prepare(const Dataset& data, const PipelineConfig& cfg) {
  Prepared out;
  Store store;
  {
    StageTimer t{out.timings, "ingest"};
    auto raw = prune_all(data.observations, cfg.prune());
    if (cfg.first_choice_only) raw = first_choice(std::move(raw));
    store.create(instances_relation(raw));
    store.create(candidates_relation(raw));
    out.raw = std::move(raw);
  }
  auto smoothing_view = [](std::string name, std::string input, SmoothingConfig sc, bool enabled) {
    return ViewDef{std::move(name), {"instances", std::move(input)}, [sc, enabled](const ViewInputs& in) {
                     auto obs = observations_from(*in[0], *in[1]);
                     if (enabled) obs = smooth_property(obs, sc);
                     return candidates_relation(obs);
                   }};
  };
  store.register_view(smoothing_view("lap_smoothed", "candidates", cfg.lap_smoothing(), cfg.smooth));
  store.register_view(smoothing_view("smoothed", "lap_smoothed", cfg.bho_smoothing(), cfg.smooth));
  {
    StageTimer t{out.timings, "lap_smoothing"};
    store.materialize("lap_smoothed");
  }
  {
    StageTimer t{out.timings, "bho_smoothing"};
    store.materialize("smoothed");
  }
  out.smoothed = observations_from(*store.relation("instances"), *store.evaluate("smoothed"));

  StageTimer t{out.timings, "learning"};
  const auto training_obs = filter_serials(out.smoothed, false);
  const auto labels = activity_labels_from(data.training);
  out.lap_axioms = learn_axioms(prepare_lap_truth(training_obs), labels, Property::lap);
  out.bho_axioms = learn_axioms(bho_truth_from(data.training), labels, Property::bho);
  return out;
}

struct RunRecord {
  std::string run_id;
  nlohmann::json config;
  std::map<std::string, double> timings;
  double data_length_seconds = 0.0;
  double process_seconds = 0.0;
  double ratio = 0.0;
  std::map<std::string, double> bho_hit_rate;  // e.g. "k1_before", "k1_after"
  MetricsReport report;
};

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [stage, secs] : r.timings) {
    stages[stage] = {{"seconds", secs},
                     {"ratio", r.data_length_seconds > 0 ? secs / r.data_length_seconds : 0.0}};
  }
  return {{"run_id", r.run_id},
          {"config", r.config},
          {"timings", stages},
          {"data_length_seconds", r.data_length_seconds},
          {"process_seconds", r.process_seconds},
          {"ratio", r.ratio},
          {"bho_hit_rate", r.bho_hit_rate},
          {"report", report_to_json(r.report)}};
}

struct RunResult {
  RunRecord record;
  PredictionTable predictions;
  std::vector<Segment> final_segments;
};

inline std::vector<LabeledInstance> truth_instances(const std::vector<TruthRow>& truth) {
  std::vector<LabeledInstance> out;
  for (const auto& t : truth) {
    if (t.serial.is_test()) out.push_back({t.id, t.serial, t.t_start, t.activity});
  }
  return out;
}

namespace detail {

inline std::map<std::string, double> bho_hit_rates(const ObservationTable& before, const ObservationTable& after,
                                                   const std::vector<TruthRow>& truth, const PipelineConfig& cfg) {
  std::vector<TruthLabel<std::string>> t;
  for (const auto& row : truth) {
    if (row.serial.is_test()) t.push_back({row.id, row.serial, row.bho});
  }
  auto ranked = [](const ObservationTable& obs) {
    std::vector<RankedLabels<std::string>> out;
    for (const auto& o : obs) {
      if (!o.serial.is_test()) continue;
      RankedLabels<std::string> r{o.id, o.serial, {}};
      for (const auto& c : o.bho.candidates) r.ranked.push_back(c.value);
      out.push_back(std::move(r));
    }
    return out;
  };
  const auto rb = ranked(before);
  const auto ra = ranked(after);
  std::map<std::string, double> out;
  if (rb.size() != t.size()) return out;
  for (bool with_null : {true, false}) {
    for (int k = 1; k <= 3; ++k) {
      EvalConfig e{k, with_null, cfg.bho_tolerance};
      const std::string suffix = "k" + std::to_string(k) + (with_null ? "" : "_excl_null");
      out[suffix + "_before"] = hit_rate(rb, t, e);
      out[suffix + "_after"] = hit_rate(ra, t, e);
    }
  }
  return out;
}

}  // namespace detail

/// Inference, segmentation and evaluation over the test serials.
inline RunResult infer_and_evaluate(const Prepared& prep, const std::vector<TruthRow>& truth,
                                    const PipelineConfig& cfg, std::map<std::string, double> timings = {}) {
  RunResult out;
  const auto test_obs = filter_serials(prep.smoothed, true);
  {
    StageTimer t{timings, "inference"};
    out.predictions = predict_all(test_obs, prep.bho_axioms, prep.lap_axioms, cfg.weights,
                                  {cfg.strict_pairs});
  }
  {
    StageTimer t{timings, "elimination"};
    auto segments = rearrange(labels_of(out.predictions));
    out.final_segments = cfg.eliminate ? three_step_eliminate(segments, cfg.elimination()) : segments;
  }
  auto& rec = out.record;
  rec.data_length_seconds = static_cast<double>(test_obs.size()) / kInstancesPerSecond;
  const auto truth_rows = truth_instances(truth);
  if (!truth_rows.empty()) {
    StageTimer t{timings, "evaluation"};
    rec.report = evaluate(out.predictions, out.final_segments, truth_rows, cfg.hl_eval());
    rec.bho_hit_rate = detail::bho_hit_rates(prep.raw, prep.smoothed, truth, cfg);
  }
  rec.config = config_to_json(cfg);
  rec.timings = std::move(timings);
  for (const auto& [stage, secs] : rec.timings) rec.process_seconds += secs;
  rec.ratio = rec.data_length_seconds > 0 ? rec.process_seconds / rec.data_length_seconds : 0.0;
  return out;
}

inline RunResult run_pipeline(const Dataset& data, const PipelineConfig& cfg) {
  auto prep = prepare(data, cfg);
  return infer_and_evaluate(prep, data.truth, cfg, prep.timings);
}

/// Generates the synthetic scenario from the config and runs every stage.
inline RunResult run_pipeline(const PipelineConfig& cfg) {
  std::map<std::string, double> gen_timing;
  Dataset data;
  {
    StageTimer t{gen_timing, "generation"};
    data = dataset_from(generate(cfg.scenario()));
  }
  auto prep = prepare(data, cfg);
  prep.timings.insert(gen_timing.begin(), gen_timing.end());
  return infer_and_evaluate(prep, data.truth, cfg, prep.timings);
}

}  // namespace probhar
