#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "probhar/domain.hpp"
#include "probhar/observations.hpp"

namespace probhar {

/// mt19937_64 output is fixed by the standard; the conversions below are our
/// own so that a seed yields the same stream on every platform.
class StableRng {
 public:
  explicit StableRng(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename V>
  const V& choose(const std::vector<Weighted<V>>& dist) {
    double total = 0.0;
    for (const auto& w : dist) total += w.p;
    double u = uniform() * total;
    for (const auto& w : dist) {
      if (u < w.p) return w.value;
      u -= w.p;
    }
    return dist.back().value;
  }

 private:
  std::mt19937_64 engine_;
};

struct NoiseProfile {
  /// Chance that the true code holds the top candidate slot.
  double p_correct_top = 1.0;
  /// Number of confusable codes emitted next to the top candidate (0..2).
  int confusion_spread = 0;
  /// Chance that an instance has no reading at all.
  double null_rate = 0.0;
  /// Mass left unassigned whenever several candidates are emitted.
  double open_world = 0.0;

  static NoiseProfile none() { return {}; }
  static NoiseProfile moderate() { return {0.6, 2, 0.02, 0.05}; }
};

struct EmissionTable {
  std::vector<Candidate> lap;  // distribution over LAP renders
  std::vector<Candidate> bho;  // distribution over BHO renders
};

struct ScheduleEntry {
  Activity activity = Activity::null;
  double seconds = 0.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 42;
  int subjects = 4;
  std::vector<int> runs{1, 2, 3, 9, 4, 5};
  std::vector<ScheduleEntry> schedule;
  std::map<Activity, EmissionTable> emissions;
  NoiseProfile lap_noise;
  NoiseProfile bho_noise;
  /// Low-level states persist for a random number of instances in this range.
  int min_dwell_instances = 3;
  int max_dwell_instances = 18;

  double run_seconds() const {
    double s = 0.0;
    for (const auto& e : schedule) s += e.seconds;
    return s;
  }

  static ScenarioConfig defaults();
  static ScenarioConfig zero_noise(std::uint64_t seed = 42) {
    auto cfg = defaults();
    cfg.seed = seed;
    return cfg;
  }
  static ScenarioConfig moderate_noise(std::uint64_t seed = 42) {
    auto cfg = defaults();
    cfg.seed = seed;
    cfg.lap_noise = NoiseProfile::moderate();
    cfg.bho_noise = NoiseProfile::moderate();
    return cfg;
  }
};

namespace detail {

inline std::vector<Candidate> lap_region(int x0, int x1, int y0, int y1, std::vector<int> sextants,
                                         std::vector<Posture> postures) {
  std::vector<Candidate> out;
  for (int x = x0; x <= x1; ++x)
    for (int y = y0; y <= y1; ++y)
      for (int s : sextants)
        for (Posture p : postures) out.push_back({encode_lap(LapCode(x, y, s, p)), 1.0});
  for (auto& c : out) c.p = 1.0 / static_cast<double>(out.size());
  return out;
}

inline std::vector<Candidate> bho_set(std::vector<std::pair<int, int>> pairs) {
  std::vector<Candidate> out;
  for (auto [r, l] : pairs) out.push_back({encode_bho(BhoCode(r, l)), 1.0 / static_cast<double>(pairs.size())});
  return out;
}

}  // namespace detail

/// A morning routine in a kitchen-like room: every activity has its own
/// floor region and its own hand-object codes.
inline ScenarioConfig ScenarioConfig::defaults() {
  using detail::bho_set;
  using detail::lap_region;
  ScenarioConfig cfg;
  cfg.schedule = {{Activity::early_morning, 180},
                  {Activity::coffee_time, 150},
                  {Activity::sandwich_time, 240},
                  {Activity::cleanup, 180},
                  {Activity::relax, 150}};
  cfg.emissions[Activity::early_morning] = {
      lap_region(3, 5, 3, 5, {0, 2, 4}, {Posture::walk, Posture::stand}),
      bho_set({{1, 0}, {2, 0}, {21, 0}, {3, 0}, {0, 1}})};
  cfg.emissions[Activity::coffee_time] = {lap_region(6, 7, 1, 2, {0, 1}, {Posture::stand}),
                                          bho_set({{7, 0}, {7, 16}, {17, 7}, {12, 7}})};
  cfg.emissions[Activity::sandwich_time] = {
      lap_region(1, 3, 1, 2, {1, 3}, {Posture::stand, Posture::sit}),
      bho_set({{13, 10}, {14, 10}, {15, 0}, {20, 0}, {9, 13}})};
  cfg.emissions[Activity::cleanup] = {lap_region(6, 8, 5, 7, {2, 3}, {Posture::stand}),
                                      bho_set({{6, 0}, {9, 6}, {8, 0}, {5, 0}, {11, 6}})};
  cfg.emissions[Activity::relax] = {lap_region(1, 2, 6, 8, {4, 5}, {Posture::sit, Posture::lie}),
                                    bho_set({{0, 0}, {19, 0}, {18, 0}, {0, 19}})};
  return cfg;
}

inline void validate(const ScenarioConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_config, what); };
  if (cfg.subjects < 1 || cfg.subjects > 9) bad("subjects must be in 1..9");
  if (cfg.runs.empty()) bad("no runs");
  for (int r : cfg.runs) SerialCode(1, r);
  if (cfg.schedule.empty()) bad("empty schedule");
  for (const auto& e : cfg.schedule) {
    if (!(e.seconds > 0)) bad("schedule durations must be positive");
    if (e.activity != Activity::null && !cfg.emissions.count(e.activity)) bad("no emission table for activity");
  }
  for (const auto& [a, table] : cfg.emissions) {
    for (const auto* dist : {&table.lap, &table.bho}) {
      if (dist->empty()) bad("empty emission distribution");
      double total = 0.0;
      for (const auto& c : *dist) total += c.p;
      if (std::abs(total - 1.0) > 1e-9) bad("emission distribution does not sum to 1");
    }
    for (const auto& c : table.lap) validate_code(Property::lap, c.value);
    for (const auto& c : table.bho) validate_code(Property::bho, c.value);
  }
  for (const auto* n : {&cfg.lap_noise, &cfg.bho_noise}) {
    if (!is_probability(n->p_correct_top) || !is_probability(n->null_rate) || !is_probability(n->open_world)) {
      bad("noise rates must lie in [0,1]");
    }
    if (n->confusion_spread < 0 || n->confusion_spread > 2) bad("confusion spread must be in 0..2");
    if (n->open_world > 0.5) bad("open-world noise mass must be at most 0.5");
  }
  if (cfg.min_dwell_instances < 1 || cfg.max_dwell_instances < cfg.min_dwell_instances) bad("bad dwell range");
}

struct Scenario {
  ObservationTable observations;       // every serial, candidates only
  std::vector<TrainingLabel> training;  // training serials
  std::vector<TruthRow> truth;          // every instance
};

namespace detail {

inline std::string confuse(Property property, const std::string& code, StableRng& rng) {
  if (property == Property::lap) {
    const auto lap = decode_lap(code);
    for (;;) {
      const int x = std::clamp<int>(lap.x() + static_cast<int>(rng.integer(-1, 1)), 1, 8);
      const int y = std::clamp<int>(lap.y() + static_cast<int>(rng.integer(-1, 1)), 1, 8);
      auto out = encode_lap(LapCode(x, y, lap.sextant(), lap.posture()));
      if (out != code) return out;
    }
  }
  const auto bho = decode_bho(code);
  for (;;) {
    const int obj = static_cast<int>(rng.integer(0, kObjectCount - 1));
    auto out = rng.bernoulli(0.5) ? encode_bho(BhoCode(obj, bho.left)) : encode_bho(BhoCode(bho.right, obj));
    if (out != code) return out;
  }
}

inline std::vector<Candidate> emit(Property property, const std::string& truth, const NoiseProfile& noise,
                                   StableRng& rng) {
  if (noise.null_rate > 0 && rng.bernoulli(noise.null_rate)) return {};
  const bool correct_top = noise.p_correct_top >= 1.0 || rng.bernoulli(noise.p_correct_top);
  const int spread = std::max(noise.confusion_spread, correct_top ? 0 : 1);
  if (spread == 0) return {{truth, 1.0 - noise.open_world}};

  std::vector<std::string> others;
  while (static_cast<int>(others.size()) < spread) {
    auto c = confuse(property, truth, rng);
    if (std::find(others.begin(), others.end(), c) == others.end()) others.push_back(std::move(c));
  }
  if (!correct_top && spread > 1 && rng.bernoulli(0.7)) others.back() = truth;

  const double top = rng.uniform(0.5, 0.8);
  const double rest = std::max(0.0, 1.0 - noise.open_world - top);
  std::vector<double> shares(others.size());
  double share_total = 0.0;
  for (auto& s : shares) share_total += (s = rng.uniform(0.2, 1.0));

  std::vector<Candidate> out;
  out.push_back({correct_top ? truth : others.front(), top});
  for (std::size_t i = correct_top ? 0 : 1; i < others.size(); ++i) {
    out.push_back({others[i], rest * shares[i] / share_total});
  }
  return prune_candidates(std::move(out));
}

}  // namespace detail

/// Deterministic given the seed. Instance ids are global and consecutive
/// within each serial; serials follow subject order, then the run list.
inline Scenario generate(const ScenarioConfig& cfg) {
  validate(cfg);
  Scenario out;
  std::int64_t next_id = 1;
  for (int subject = 1; subject <= cfg.subjects; ++subject) {
    for (int run : cfg.runs) {
      const SerialCode serial(subject, run);
      StableRng rng(StableRng::mix(cfg.seed ^ StableRng::mix(static_cast<std::uint64_t>(serial.value()))));
      std::int64_t k = 0;
      for (const auto& entry : cfg.schedule) {
        const auto count = static_cast<std::int64_t>(std::llround(entry.seconds * kInstancesPerSecond));
        const EmissionTable* table = nullptr;
        if (auto it = cfg.emissions.find(entry.activity); it != cfg.emissions.end()) table = &it->second;
        std::string lap = "0000";
        std::string bho = "0000";
        std::int64_t lap_left = 0;
        std::int64_t bho_left = 0;
        for (std::int64_t i = 0; i < count; ++i, ++k) {
          if (table && lap_left == 0) {
            lap = rng.choose(table->lap);
            lap_left = rng.integer(cfg.min_dwell_instances, cfg.max_dwell_instances);
          }
          if (table && bho_left == 0) {
            bho = rng.choose(table->bho);
            bho_left = rng.integer(cfg.min_dwell_instances, cfg.max_dwell_instances);
          }
          --lap_left;
          --bho_left;
          const InstanceId id{next_id++};
          const double t = static_cast<double>(k) / kInstancesPerSecond;
          auto obs = make_observation(id, serial, t);
          if (table) {
            obs.lap.candidates = detail::emit(Property::lap, lap, cfg.lap_noise, rng);
            obs.bho.candidates = detail::emit(Property::bho, bho, cfg.bho_noise, rng);
          }
          out.observations.push_back(std::move(obs));
          out.truth.push_back({id, serial, t, entry.activity, lap, bho});
          if (serial.is_training()) out.training.push_back({id, entry.activity, bho});
        }
      }
    }
  }
  return out;
}

inline std::vector<TruthRow> test_truth(const Scenario& s) {
  std::vector<TruthRow> out;
  for (const auto& t : s.truth) {
    if (t.serial.is_test()) out.push_back(t);
  }
  return out;
}

}  // namespace probhar
