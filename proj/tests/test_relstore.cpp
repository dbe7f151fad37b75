#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace probhar;

namespace {

ProbRelation keyed(std::string name = "r") {
  return ProbRelation(std::move(name),
                      Schema{{"g", ColumnType::text}, {"v", ColumnType::text}, {"pr", ColumnType::probability}},
                      {"g"});
}

Row row(const std::string& g, const std::string& v, double p) { return {Value{g}, Value{v}, Value{p}}; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_config;
}

}  // namespace

TEST(ProbRelation, OpenWorldMass) {
  auto r = keyed();
  r.insert_rows({row("g", "a", 0.3), row("g", "b", 0.2)});
  EXPECT_DOUBLE_EQ(r.open_world_mass({Value{std::string("g")}}), 0.5);
  EXPECT_EQ(r.open_world_mass({Value{std::string("absent")}}), 1.0);
  r.insert_rows({row("h", "a", 1.0)});
  EXPECT_EQ(r.open_world_mass({Value{std::string("h")}}), 0.0);
}

TEST(ProbRelation, RejectsOverfullGroup) {
  auto r = keyed();
  EXPECT_EQ(kind_of([&] { r.insert_rows({row("g", "a", 0.7), row("g", "b", 0.4)}); }),
            ErrorKind::constraint_violation);
  EXPECT_TRUE(r.empty());
  r.insert_rows({row("g", "a", 0.7)});
  EXPECT_EQ(kind_of([&] { r.insert_row(row("g", "b", 0.4)); }), ErrorKind::constraint_violation);
  EXPECT_EQ(r.size(), 1u);
}

TEST(ProbRelation, SchemaAndKeyErrors) {
  auto r = keyed();
  EXPECT_EQ(kind_of([&] { r.insert_row({Value{std::string("g")}, Value{0.1}}); }), ErrorKind::schema_mismatch);
  EXPECT_EQ(kind_of([&] { r.insert_row({Value{std::int64_t{1}}, Value{std::string("a")}, Value{0.1}}); }),
            ErrorKind::schema_mismatch);
  EXPECT_EQ(kind_of([&] { r.insert_row(row("g", "a", 1.5)); }), ErrorKind::constraint_violation);
  ProbRelation plain("p", Schema{{"x", ColumnType::integer}});
  EXPECT_EQ(kind_of([&] { plain.open_world_mass({}); }), ErrorKind::no_prob_key);
  EXPECT_EQ(kind_of([&] { ProbRelation("bad", Schema{{"x", ColumnType::integer}}, {"x"}); }),
            ErrorKind::schema_mismatch);
}

TEST(ProbRelation, AdversarialBatchesKeepInvariantAndSnapshot) {
  const auto dir = oracle::temp_dir("adv");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.6);
  auto r = keyed();
  int accepted = 0;
  int rejected = 0;
  for (int batch = 0; batch < 400; ++batch) {
    std::vector<Row> rows;
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < k; ++i) {
      rows.push_back(row("g" + std::to_string(rng() % 8), "v" + std::to_string(i), u(rng)));
    }
    save_snapshot(r, (dir / "before.csv").string());
    try {
      r.insert_rows(rows);
      ++accepted;
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::constraint_violation);
      ++rejected;
      save_snapshot(r, (dir / "after.csv").string());
      ASSERT_EQ(slurp(dir / "before.csv"), slurp(dir / "after.csv"));
    }
    ASSERT_LE(r.max_group_mass(), 1.0 + kMassTolerance);
  }
  EXPECT_GT(accepted, 0);
  EXPECT_GT(rejected, 0);
  std::filesystem::remove_all(dir);
}

TEST(Snapshot, RoundTripsTenThousandRows) {
  const auto dir = oracle::temp_dir("snap");
  ProbRelation r("mixed",
                 Schema{{"id", ColumnType::integer},
                        {"x", ColumnType::real},
                        {"s", ColumnType::text},
                        {"pr", ColumnType::probability}},
                 {"id"});
  std::mt19937_64 rng(9);
  std::vector<Row> rows;
  const std::vector<std::string> texts{"plain", "with,comma", "with \"quote\"", "line\nbreak", "", "6402"};
  for (int i = 0; i < 10000; ++i) {
    rows.push_back({Value{std::int64_t{i}}, Value{std::uniform_real_distribution<double>(-1e6, 1e6)(rng)},
                    Value{texts[rng() % texts.size()]}, Value{std::uniform_real_distribution<double>(0, 1)(rng)}});
  }
  r.insert_rows(rows);
  const auto path = (dir / "mixed.csv").string();
  save_snapshot(r, path);
  const auto back = load_snapshot(path);
  EXPECT_TRUE(bag_equal(r, back));
  EXPECT_EQ(back.schema(), r.schema());
  EXPECT_EQ(back.prob_key(), r.prob_key());

  save_snapshot(back, (dir / "again.csv").string());
  EXPECT_EQ(slurp(path), slurp(dir / "again.csv"));

  ProbRelation empty("empty", Schema{{"a", ColumnType::integer}});
  save_snapshot(empty, (dir / "empty.csv").string());
  EXPECT_TRUE(load_snapshot((dir / "empty.csv").string()).empty());
  std::filesystem::remove_all(dir);
}

TEST(Snapshot, TamperedFileFailsOnLoad) {
  const auto dir = oracle::temp_dir("tamper");
  auto r = keyed();
  r.insert_rows({row("g", "a", 0.6), row("g", "b", 0.2)});
  const auto path = (dir / "r.csv").string();
  save_snapshot(r, path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "g,c,0.4\r\n";
  }
  EXPECT_EQ(kind_of([&] { load_snapshot(path); }), ErrorKind::constraint_violation);
  EXPECT_EQ(kind_of([&] { load_snapshot((dir / "missing.csv").string()); }), ErrorKind::io_error);
  std::filesystem::remove_all(dir);
}

namespace {

ViewDef doubling(std::string name, std::string input) {
  return {std::move(name), {std::move(input)}, [](const ViewInputs& in) {
            ProbRelation out("tmp", Schema{{"x", ColumnType::integer}});
            for (const auto& r : in[0]->rows()) out.insert_row({Value{2 * as_int(r[0])}});
            return out;
          }};
}

ProbRelation ints(std::initializer_list<std::int64_t> xs) {
  ProbRelation r("base", Schema{{"x", ColumnType::integer}});
  for (auto x : xs) r.insert_row({Value{x}});
  return r;
}

}  // namespace

TEST(Store, ViewsRecomputeWhenInputsChange) {
  Store s;
  s.create(ints({1, 2}));
  s.register_view(doubling("twice", "base"));
  s.register_view(doubling("four", "twice"));
  EXPECT_TRUE(bag_equal(*s.evaluate("four"), ints({4, 8})));
  auto cached = s.evaluate("four");
  EXPECT_EQ(cached, s.evaluate("four"));  // same object while inputs are unchanged

  s.insert_rows("base", {{Value{std::int64_t{3}}}});
  EXPECT_TRUE(bag_equal(*s.evaluate("four"), ints({4, 8, 12})));
}

TEST(Store, IdentityView) {
  Store s;
  s.create(ints({5, 7}));
  s.register_view({"id", {"base"}, [](const ViewInputs& in) { return *in[0]; }});
  EXPECT_TRUE(bag_equal(*s.evaluate("id"), *s.relation("base")));
}

TEST(Store, MaterializeServesStaleCopyUntilInvalidated) {
  Store s;
  s.create(ints({1}));
  s.register_view(doubling("twice", "base"));
  s.materialize("twice");
  EXPECT_TRUE(s.is_materialized("twice"));
  s.insert_rows("base", {{Value{std::int64_t{2}}}});
  EXPECT_TRUE(bag_equal(*s.evaluate("twice"), ints({2})));
  s.invalidate("twice");
  EXPECT_TRUE(bag_equal(*s.evaluate("twice"), ints({2, 4})));
  EXPECT_EQ(kind_of([&] { s.materialize("base"); }), ErrorKind::unknown_view);
}

TEST(Store, RejectsMissingInputsAndCycles) {
  Store s;
  s.create(ints({1}));
  EXPECT_EQ(kind_of([&] { s.register_view(doubling("v", "nope")); }), ErrorKind::unknown_input);
  EXPECT_EQ(kind_of([&] { s.register_view(doubling("self", "self")); }), ErrorKind::cycle_detected);
  s.register_view(doubling("a", "base"));
  s.register_view(doubling("b", "a"));
  EXPECT_EQ(kind_of([&] { s.register_view(doubling("a", "b")); }), ErrorKind::cycle_detected);
  EXPECT_TRUE(bag_equal(*s.evaluate("b"), ints({4})));  // the failed re-registration left "a" intact
  EXPECT_EQ(kind_of([&] { s.evaluate("ghost"); }), ErrorKind::unknown_input);
}

TEST(Csv, QuotesAndParsesRfc4180) {
  std::stringstream ss;
  csv::write_record(ss, {"a", "b,c", "d\"e", "f\ng", ""});
  EXPECT_EQ(ss.str(), "a,\"b,c\",\"d\"\"e\",\"f\ng\",\r\n");
  csv::Reader reader(ss);
  std::vector<std::string> fields;
  ASSERT_TRUE(reader.next(fields));
  EXPECT_EQ(fields, (std::vector<std::string>{"a", "b,c", "d\"e", "f\ng", ""}));
  EXPECT_FALSE(reader.next(fields));
}
