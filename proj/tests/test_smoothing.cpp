#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace probhar;

namespace {

using D = Distribution<std::string>;

Observation lap_obs(std::int64_t id, SerialCode serial, std::vector<Candidate> cands) {
  auto o = make_observation(InstanceId{id}, serial, static_cast<double>(id - 1) / 3.0);
  o.lap.candidates = std::move(cands);
  return o;
}

double find_p(const D& d, const std::string& v) {
  for (const auto& w : d) {
    if (w.value == v) return w.p;
  }
  return 0.0;
}

}  // namespace

TEST(ProbabilisticMode, Examples) {
  const D a{{"sitting", 0.6}, {"standing", 0.3}};
  EXPECT_EQ(probabilistic_mode(std::vector<D>{a}), a);
  EXPECT_EQ(probabilistic_mode(std::vector<D>{a, a, a}), a);

  const auto st = probabilistic_mode(std::vector<D>{{{"s", 1.0}}, {{"t", 1.0}}});
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st[0], (Weighted<std::string>{"s", 0.5}));
  EXPECT_EQ(st[1], (Weighted<std::string>{"t", 0.5}));
}

TEST(ProbabilisticMode, WalkLieWindow) {
  const D walk{{"walk", 1.0}};
  const D lie{{"lie", 1.0}};
  const auto out = probabilistic_mode(std::vector<D>{walk, walk, lie, walk, walk});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].value, "walk");
  EXPECT_EQ(out[0].p, 0.8);
  EXPECT_EQ(out[1].value, "lie");
  EXPECT_EQ(out[1].p, 0.2);
}

TEST(ProbabilisticMode, Errors) {
  try {
    probabilistic_mode(std::vector<D>{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
  EXPECT_THROW(probabilistic_mode(std::vector<D>{{{"a", 0.8}, {"b", 0.4}}}), Error);
}

TEST(ProbabilisticMode, MatchesSummationOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 11)(rng);
    std::vector<Distribution<int>> args;
    double mass_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      Distribution<int> d;
      const int k = std::uniform_int_distribution<int>(0, 4)(rng);
      double left = 1.0;
      for (int j = 0; j < k; ++j) {
        const int v = std::uniform_int_distribution<int>(0, 20)(rng);
        bool dup = false;
        for (const auto& w : d) dup = dup || w.value == v;
        if (dup) continue;
        const double p = std::uniform_real_distribution<double>(0, left)(rng);
        left -= p;
        d.push_back({v, p});
        mass_sum += p;
      }
      args.push_back(std::move(d));
    }
    const auto got = probabilistic_mode(args);
    const auto want = oracle::mode(args);
    ASSERT_EQ(got.size(), want.size());
    double mass = 0.0;
    for (const auto& w : got) {
      ASSERT_NEAR(w.p, want.at(w.value), 1e-12);
      mass += w.p;
    }
    EXPECT_NEAR(mass, mass_sum / n, 1e-12);
  }
}

TEST(ProbabilisticMode, AgreesWithMajority) {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 11)(rng);
    std::vector<int> xs;
    std::vector<Distribution<int>> args;
    for (int i = 0; i < n; ++i) {
      xs.push_back(std::uniform_int_distribution<int>(0, 2)(rng));
      args.push_back({{xs.back(), 1.0}});
    }
    if (auto maj = oracle::strict_majority(xs)) {
      EXPECT_EQ(probabilistic_mode(args).front().value, *maj);
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(SmoothProperty, MiddleAndEdgeOfSerial) {
  const SerialCode s(1, 4);
  ObservationTable obs;
  const std::vector<std::string> seq{"0002", "0002", "0004", "0002", "0002"};
  for (std::size_t i = 0; i < seq.size(); ++i) obs.push_back(lap_obs(static_cast<std::int64_t>(i + 1), s, {{seq[i], 1.0}}));
  SmoothingConfig cfg{Property::lap, 2, false, false, {}};
  const auto out = smooth_property(obs, cfg);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(find_p(out[2].lap.candidates, "0002"), 0.8);
  EXPECT_EQ(find_p(out[2].lap.candidates, "0004"), 0.2);
  // First instance: window {1,2,3}, n = 3.
  EXPECT_DOUBLE_EQ(find_p(out[0].lap.candidates, "0002"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(find_p(out[0].lap.candidates, "0004"), 1.0 / 3.0);
}

TEST(SmoothProperty, WindowStopsAtSerialBoundary) {
  ObservationTable obs;
  for (int i = 1; i <= 4; ++i) obs.push_back(lap_obs(i, SerialCode(1, 4), {{"1111", 1.0}}));
  for (int i = 5; i <= 8; ++i) obs.push_back(lap_obs(i, SerialCode(1, 5), {{"2222", 1.0}}));
  const auto out = smooth_property(obs, {Property::lap, 3, false, false, {}});
  for (const auto& o : out) {
    ASSERT_EQ(o.lap.candidates.size(), 1u);
    EXPECT_EQ(o.lap.candidates[0].p, 1.0);
  }
}

TEST(SmoothProperty, TestOnlyLeavesTrainingSerials) {
  ObservationTable obs;
  obs.push_back(lap_obs(1, SerialCode(1, 1), {{"1111", 1.0}}));
  obs.push_back(lap_obs(2, SerialCode(1, 1), {{"2222", 1.0}}));
  auto cfg = SmoothingConfig{Property::lap, 1, false, true, {}};
  const auto out = smooth_property(obs, cfg);
  EXPECT_EQ(out[0].lap.candidates, obs[0].lap.candidates);
  EXPECT_EQ(out[1].lap.candidates, obs[1].lap.candidates);
}

TEST(SmoothProperty, BruteForceWindowOracleAndInvariants) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> codes{"1101", "1102", "2201", "2203", "3304"};
  ObservationTable obs;
  std::int64_t id = 1;
  for (int run : {4, 5}) {
    for (int i = 0; i < 60; ++i) {
      std::vector<Candidate> c;
      double left = 1.0;
      for (const auto& code : codes) {
        if (rng() % 2) continue;
        const double p = std::uniform_real_distribution<double>(0, left)(rng);
        left -= p;
        c.push_back({code, p});
      }
      obs.push_back(lap_obs(id++, SerialCode(2, run), prune_candidates(c, {0.0, 10})));
    }
  }
  for (int k : {1, 3, 5}) {
    const SmoothingConfig cfg{Property::lap, k, false, false, {0.0, 10}};
    const auto out = smooth_property(obs, cfg);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      std::vector<D> window;
      for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto d = std::abs(obs[j].id.value - obs[i].id.value);
        if (obs[j].serial == obs[i].serial && d <= k) window.push_back(obs[j].lap.candidates);
      }
      const auto want = oracle::mode(window);
      ASSERT_EQ(out[i].lap.candidates.size(), want.size());
      for (const auto& c : out[i].lap.candidates) {
        ASSERT_NEAR(c.p, want.at(c.value), 1e-12);
      }
    }
    // shift equivariance: renumbering ids by an offset changes nothing else
    auto shifted = obs;
    for (auto& o : shifted) o.id.value += 1000;
    const auto out2 = smooth_property(shifted, cfg);
    for (std::size_t i = 0; i < obs.size(); ++i) ASSERT_EQ(out2[i].lap.candidates, out[i].lap.candidates);
  }
}

TEST(SmoothProperty, PreservesRowCountAndPrunes) {
  ObservationTable obs;
  for (int i = 1; i <= 20; ++i) {
    obs.push_back(lap_obs(i, SerialCode(1, 4),
                          {{"1101", 0.4}, {encode_lap(LapCode(i % 9, 1, 1, Posture::stand)), 0.3}}));
  }
  const auto out = smooth_property(obs, SmoothingConfig::lap_defaults());
  ASSERT_EQ(out.size(), obs.size());
  for (const auto& o : out) {
    EXPECT_LE(o.lap.candidates.size(), 3u);
    for (const auto& c : o.lap.candidates) EXPECT_GT(c.p, 0.01);
  }
  EXPECT_THROW(smooth_property(obs, {Property::lap, 0, false, false, {}}), Error);
}
