#pragma once

#include <algorithm>
#include <span>
#include <unordered_map>
#include <vector>

#include "probhar/domain.hpp"
#include "probhar/observations.hpp"

namespace probhar {

template <typename V>
using Distribution = std::vector<Weighted<V>>;

using ProbDistribution = Distribution<std::string>;

struct ModeOptions {
  /// Rescale the output to total mass 1. Off by default: the operator works
  /// on known probabilities and leaves the open-world remainder alone.
  bool renormalize = false;
};

/// Probabilistic Mode: the probability of each domain value in the output is
/// the sum of its probabilities across the n arguments, divided by n.
/// Values with zero output probability are omitted. The result is ordered
/// most probable first, ascending value on ties.
template <typename V>
Distribution<V> probabilistic_mode(std::span<const Distribution<V>> args, const ModeOptions& opts = {}) {
  if (args.empty()) throw Error(ErrorKind::empty_input, "probabilistic mode of no arguments");
  std::unordered_map<V, double> sums;
  std::vector<V> order;  // first-seen order keeps summation order deterministic
  for (const auto& arg : args) {
    double mass = 0.0;
    for (const auto& w : arg) {
      require_probability(w.p, "mode argument");
      mass += w.p;
      auto [it, fresh] = sums.try_emplace(w.value, 0.0);
      if (fresh) order.push_back(w.value);
      it->second += w.p;
    }
    if (mass > 1.0 + kMassTolerance) {
      throw Error(ErrorKind::constraint_violation, "mode argument has mass above 1");
    }
  }
  const double n = static_cast<double>(args.size());
  Distribution<V> out;
  out.reserve(order.size());
  double total = 0.0;
  for (const auto& v : order) {
    const double p = sums[v] / n;
    if (p > 0.0) {
      out.push_back({v, p});
      total += p;
    }
  }
  if (opts.renormalize && total > 0.0) {
    for (auto& w : out) w.p /= total;
  }
  std::sort(out.begin(), out.end(), [](const Weighted<V>& a, const Weighted<V>& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.value < b.value;
  });
  return out;
}

template <typename V>
Distribution<V> probabilistic_mode(const std::vector<Distribution<V>>& args, const ModeOptions& opts = {}) {
  return probabilistic_mode(std::span<const Distribution<V>>(args), opts);
}

struct SmoothingConfig {
  Property property = Property::lap;
  /// Window is [i - k, i + k] clipped to the instance's serial.
  int half_width = 3;
  bool renormalize = false;
  /// Leave training serials untouched (BHO training truth is deterministic).
  bool test_serials_only = false;
  PruneOptions prune{};

  static SmoothingConfig lap_defaults() { return {Property::lap, 3, false, false, {}}; }
  static SmoothingConfig bho_defaults() { return {Property::bho, 5, false, true, {}}; }
};

inline void validate(const SmoothingConfig& cfg) {
  if (cfg.half_width < 1 || cfg.half_width > 10) {
    throw Error(ErrorKind::invalid_config, "smoothing half-width must be in 1..10");
  }
}

/// Replaces every instance's candidate set for `cfg.property` by the
/// probabilistic mode of the instances within `half_width` ids of it in the
/// same serial, then re-prunes. Near serial edges the window (and the mode's
/// divisor) shrinks to the instances that exist.
inline ObservationTable smooth_property(const ObservationTable& obs, const SmoothingConfig& cfg) {
  validate(cfg);
  ObservationTable out = obs;
  std::vector<ProbDistribution> window;
  for (auto [begin, end] : serial_ranges(obs)) {
    if (cfg.test_serials_only && !obs[begin].serial.is_test()) continue;
    std::size_t lo = begin;
    std::size_t hi = begin;  // window is [lo, hi)
    for (std::size_t i = begin; i < end; ++i) {
      const auto id = obs[i].id.value;
      while (obs[lo].id.value < id - cfg.half_width) ++lo;
      while (hi < end && obs[hi].id.value <= id + cfg.half_width) ++hi;
      window.clear();
      for (std::size_t j = lo; j < hi; ++j) window.push_back(obs[j].of(cfg.property).candidates);
      auto mode = probabilistic_mode(std::span<const ProbDistribution>(window), {cfg.renormalize});
      out[i].of(cfg.property).candidates = prune_candidates(std::move(mode), cfg.prune);
    }
  }
  return out;
}

}  // namespace probhar
