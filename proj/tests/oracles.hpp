#pragma once

// Deliberately naive reference implementations. They share no code with the
// library beyond plain data types, so agreement means something.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "probhar/probhar.hpp"

namespace oracle {

using namespace probhar;

// Probabilistic mode by direct summation: for each value in the union, scan
// every argument linearly.
template <typename V>
std::map<V, double> mode(const std::vector<std::vector<Weighted<V>>>& args) {
  std::vector<V> domain;
  for (const auto& a : args) {
    for (const auto& w : a) {
      if (std::find(domain.begin(), domain.end(), w.value) == domain.end()) domain.push_back(w.value);
    }
  }
  std::map<V, double> out;
  for (const auto& v : domain) {
    double s = 0.0;
    for (const auto& a : args) {
      for (const auto& w : a) {
        if (w.value == v) s += w.p;
      }
    }
    if (s > 0.0) out[v] = s / static_cast<double>(args.size());
  }
  return out;
}

// Classical mode of deterministic values; only defined with a strict majority.
template <typename V>
std::optional<V> strict_majority(const std::vector<V>& xs) {
  for (const auto& x : xs) {
    const auto c = std::count(xs.begin(), xs.end(), x);
    if (2 * static_cast<std::size_t>(c) > xs.size()) return x;
  }
  return std::nullopt;
}

// Axiom table by scanning the joined corpus once per (code, activity) pair.
inline std::map<std::string, std::array<double, 5>> axioms(const std::vector<std::pair<std::string, int>>& corpus) {
  std::vector<std::string> codes;
  for (const auto& [c, a] : corpus) {
    if (std::find(codes.begin(), codes.end(), c) == codes.end()) codes.push_back(c);
  }
  const double n = static_cast<double>(corpus.size());
  std::map<std::string, std::array<double, 5>> out;
  for (const auto& code : codes) {
    double count_c = 0;
    for (const auto& [c, a] : corpus) count_c += (c == code);
    std::array<double, 5> row{};
    for (int k = 0; k < 5; ++k) {
      double count_ac = 0;
      for (const auto& [c, a] : corpus) count_ac += (c == code && a == 101 + k);
      row[static_cast<std::size_t>(k)] = (count_ac + 1) / (count_c + n);
    }
    out[code] = row;
  }
  return out;
}

struct Cand {
  std::string code;
  double p;
};

// Exhaustive item enumeration with index -1 standing for the absent side.
// Returns per-activity best scores and the winner code (0 for null).
inline std::pair<std::array<double, 5>, int> predict(const std::vector<Cand>& bho, const std::vector<Cand>& lap,
                                                     const std::map<std::string, std::array<double, 5>>& bho_ax,
                                                     const std::map<std::string, std::array<double, 5>>& lap_ax,
                                                     const std::array<double, 5>& m, const std::array<double, 5>& n,
                                                     bool strict = false) {
  std::array<double, 5> best{};
  const int lo = strict ? 0 : -1;
  for (int i = lo; i < static_cast<int>(bho.size()); ++i) {
    for (int j = lo; j < static_cast<int>(lap.size()); ++j) {
      if (i < 0 && j < 0) continue;
      for (std::size_t a = 0; a < 5; ++a) {
        double b = 0.0;
        double l = 0.0;
        if (i >= 0) {
          auto it = bho_ax.find(bho[static_cast<std::size_t>(i)].code);
          if (it != bho_ax.end()) b = bho[static_cast<std::size_t>(i)].p * it->second[a];
        }
        if (j >= 0) {
          auto it = lap_ax.find(lap[static_cast<std::size_t>(j)].code);
          if (it != lap_ax.end()) l = lap[static_cast<std::size_t>(j)].p * it->second[a];
        }
        const double t = 1.0 - (1.0 - m[a] * b) * (1.0 - n[a] * l);
        best[a] = std::max(best[a], t);
      }
    }
  }
  int winner = 0;
  double top = 0.0;
  for (std::size_t a = 0; a < 5; ++a) {
    if (best[a] > top) {
      top = best[a];
      winner = 101 + static_cast<int>(a);
    }
  }
  return {best, winner};
}

// Three-step elimination simulated on a per-instance label array.
inline std::vector<int> eliminate(std::vector<int> labels, const std::vector<int>& thresholds) {
  struct Run {
    std::size_t start, len;
    int label;
  };
  auto runs_of = [](const std::vector<int>& xs) {
    std::vector<Run> runs;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!runs.empty() && runs.back().label == xs[i]) {
        ++runs.back().len;
      } else {
        runs.push_back({i, 1, xs[i]});
      }
    }
    return runs;
  };
  for (int t : thresholds) {
    const auto runs = runs_of(labels);
    std::vector<bool> keep;
    bool any = false;
    for (const auto& r : runs) {
      keep.push_back(static_cast<int>(r.len) >= t);
      any = any || keep.back();
    }
    if (!any) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].len > runs[best].len) best = i;
      }
      std::fill(labels.begin(), labels.end(), runs[best].label);
      return labels;
    }
    std::optional<int> carry;
    std::size_t first_kept = 0;
    while (!keep[first_kept]) ++first_kept;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (keep[r]) {
        carry = runs[r].label;
        continue;
      }
      const int fill = carry ? *carry : runs[first_kept].label;
      for (std::size_t k = 0; k < runs[r].len; ++k) labels[runs[r].start + k] = fill;
    }
  }
  return labels;
}

// Confusion counts with the tolerance window applied by scanning every truth
// row of the same serial.
inline std::array<std::array<std::size_t, 6>, 6> confusion(const std::vector<LabeledInstance>& pred,
                                                           const std::vector<LabeledInstance>& truth,
                                                           std::int64_t radius, bool include_null) {
  auto cls = [](Activity a) { return a == Activity::null ? 0u : static_cast<unsigned>(code_of(a) - 100); };
  std::array<std::array<std::size_t, 6>, 6> out{};
  for (const auto& p : pred) {
    const LabeledInstance* own = nullptr;
    bool found = false;
    for (const auto& t : truth) {
      if (t.id == p.id) own = &t;
      if (t.serial == p.serial && std::abs(t.id.value - p.id.value) <= radius && t.activity == p.activity) found = true;
    }
    if (!include_null && own->activity == Activity::null) continue;
    const Activity eff = found ? p.activity : own->activity;
    ++out[cls(eff)][cls(p.activity)];
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("probhar_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
