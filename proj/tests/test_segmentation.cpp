#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace probhar;

namespace {

const SerialCode kSerial(1, 4);

std::vector<LabeledInstance> labels(const std::vector<Activity>& xs, std::int64_t first_id = 1,
                                    SerialCode serial = kSerial) {
  std::vector<LabeledInstance> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::int64_t id = first_id + static_cast<std::int64_t>(i);
    out.push_back({InstanceId{id}, serial, static_cast<double>(id - first_id) / 3.0, xs[i]});
  }
  return out;
}

std::vector<Activity> runs(std::initializer_list<std::pair<Activity, int>> runs_of) {
  std::vector<Activity> out;
  for (const auto& [a, n] : runs_of) out.insert(out.end(), static_cast<std::size_t>(n), a);
  return out;
}

constexpr auto A = Activity::relax;
constexpr auto B = Activity::coffee_time;
constexpr auto C = Activity::early_morning;

std::vector<int> codes_of(const std::vector<LabeledInstance>& xs) {
  std::vector<int> out;
  for (const auto& x : xs) out.push_back(code_of(x.activity));
  return out;
}

}  // namespace

TEST(Rearrange, CollapsesRuns) {
  const auto segs = rearrange(labels({A, A, B, A, A}));
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].activity, A);
  EXPECT_EQ(segs[0].length_instances, 2);
  EXPECT_EQ(segs[1].activity, B);
  EXPECT_EQ(segs[1].length_instances, 1);
  EXPECT_EQ(segs[2].length_instances, 2);
  EXPECT_EQ(segs[2].start_id.value, 4);

  EXPECT_EQ(rearrange(labels({B, B, B, B})).size(), 1u);
  EXPECT_EQ(rearrange(segs), segs);
}

TEST(Rearrange, SplitsAtSerialBoundary) {
  auto xs = labels({A, A}, 1, SerialCode(1, 4));
  for (const auto& l : labels({A, A, A}, 3, SerialCode(1, 5))) xs.push_back(l);
  const auto segs = rearrange(xs);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].length_instances, 2);
  EXPECT_EQ(segs[1].length_instances, 3);
}

TEST(Eliminate, AbsorbsShortMiddleSegment) {
  const auto out = three_step_eliminate(rearrange(labels(runs({{A, 100}, {B, 10}, {A, 200}}))));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].activity, A);
  EXPECT_EQ(out[0].length_instances, 310);
}

TEST(Eliminate, SingleSegmentUnchanged) {
  const auto in = rearrange(labels(runs({{B, 7}})));
  EXPECT_EQ(three_step_eliminate(in), in);
}

TEST(Eliminate, DegenerateKeepsLongestSpanningSerial) {
  const auto out = three_step_eliminate(rearrange(labels(runs({{A, 20}, {B, 20}, {C, 20}}))));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].activity, A);  // earliest of the equally long
  EXPECT_EQ(out[0].start_id.value, 1);
  EXPECT_EQ(out[0].length_instances, 60);

  const auto longest = three_step_eliminate(rearrange(labels(runs({{A, 10}, {B, 30}, {C, 20}}))));
  ASSERT_EQ(longest.size(), 1u);
  EXPECT_EQ(longest[0].activity, B);
}

TEST(Eliminate, LeadingSpanGoesToFirstSurvivor) {
  const auto out = three_step_eliminate(rearrange(labels(runs({{B, 5}, {A, 80}, {C, 90}}))));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].activity, A);
  EXPECT_EQ(out[0].start_id.value, 1);
  EXPECT_EQ(out[0].length_instances, 85);
  EXPECT_EQ(out[1].length_instances, 90);
}

TEST(Eliminate, SecondsUnit) {
  EliminationConfig cfg{{5, 11.7, 18.3}, LengthUnit::seconds};
  const auto out = three_step_eliminate(rearrange(labels(runs({{A, 60}, {B, 54}, {A, 60}}))), cfg);
  ASSERT_EQ(out.size(), 1u);  // 54 instances = 18 s < 18.3 s
  EXPECT_THROW(three_step_eliminate({}, EliminationConfig{{10, 5}}), Error);
}

TEST(Eliminate, MatchesStepSimulationOracleWithProperties) {
  std::mt19937_64 rng(99);
  const std::vector<int> thresholds{15, 35, 55};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LabeledInstance> xs;
    std::int64_t id = 1;
    std::vector<std::vector<int>> per_serial_in;
    for (int run : {4, 5}) {
      std::vector<Activity> acts;
      const int nseg = std::uniform_int_distribution<int>(1, 25)(rng);
      for (int s = 0; s < nseg; ++s) {
        const Activity a = rng() % 7 == 0 ? Activity::null : kActivities[rng() % 3];
        const int len = std::uniform_int_distribution<int>(1, rng() % 2 ? 20 : 150)(rng);
        acts.insert(acts.end(), static_cast<std::size_t>(len), a);
      }
      auto part = labels(acts, id, SerialCode(3, run));
      id += static_cast<std::int64_t>(acts.size());
      per_serial_in.push_back(codes_of(part));
      xs.insert(xs.end(), part.begin(), part.end());
    }
    const auto out = three_step_eliminate(rearrange(xs));
    const auto expanded = expand_final(out);  // also checks the tiling
    ASSERT_EQ(expanded.size(), xs.size());

    std::vector<int> want;
    for (const auto& s : per_serial_in) {
      const auto e = oracle::eliminate(s, thresholds);
      want.insert(want.end(), e.begin(), e.end());
    }
    ASSERT_EQ(codes_of(expanded), want);

    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i > 0 && out[i - 1].serial == out[i].serial) {
        ASSERT_NE(out[i - 1].activity, out[i].activity);
      }
      const bool alone = (i == 0 || out[i - 1].serial != out[i].serial) &&
                         (i + 1 == out.size() || out[i + 1].serial != out[i].serial);
      if (!alone) ASSERT_GE(out[i].length_instances, 55);
    }
    ASSERT_EQ(three_step_eliminate(out), out);
  }
}

TEST(FinalRelation, RoundTrip) {
  const auto segs = three_step_eliminate(rearrange(labels(runs({{A, 100}, {B, 70}}))));
  EXPECT_EQ(segments_from(final_relation(segs)), segs);
}
