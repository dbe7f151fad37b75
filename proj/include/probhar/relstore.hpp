#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"
#include "probhar/csv.hpp"
#include "probhar/domain.hpp"
#include "probhar/error.hpp"

namespace probhar {

enum class ColumnType { integer, real, text, probability };

inline std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
    case ColumnType::text: return "text";
    case ColumnType::probability: return "probability";
  }
  return "text";
}

inline ColumnType parse_column_type(std::string_view s) {
  if (s == "integer") return ColumnType::integer;
  if (s == "real") return ColumnType::real;
  if (s == "text") return ColumnType::text;
  if (s == "probability") return ColumnType::probability;
  throw Error(ErrorKind::schema_mismatch, "unknown column type '" + std::string(s) + "'");
}

struct Column {
  std::string name;
  ColumnType type = ColumnType::text;
  friend bool operator==(const Column&, const Column&) = default;
};

class Schema {
 public:
  Schema() = default;
  Schema(std::initializer_list<Column> columns) : Schema(std::vector<Column>(columns)) {}
  explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string> names;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (!names.insert(columns_[i].name).second) {
        throw Error(ErrorKind::schema_mismatch, "duplicate column '" + columns_[i].name + "'");
      }
      if (columns_[i].type == ColumnType::probability) {
        if (prob_column_) {
          throw Error(ErrorKind::schema_mismatch, "more than one probability column");
        }
        prob_column_ = i;
      }
    }
  }

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  std::optional<std::size_t> probability_column() const { return prob_column_; }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    throw Error(ErrorKind::schema_mismatch, "no column '" + std::string(name) + "'");
  }

  friend bool operator==(const Schema& a, const Schema& b) { return a.columns_ == b.columns_; }

 private:
  std::vector<Column> columns_;
  std::optional<std::size_t> prob_column_;
};

using Value = std::variant<std::int64_t, double, std::string>;
using Row = std::vector<Value>;

inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline double as_real(const Value& v) { return std::get<double>(v); }
inline const std::string& as_text(const Value& v) { return std::get<std::string>(v); }

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace detail

/// A named bag of rows. When a probabilistic key is set, the probability
/// column of every group of rows sharing the key columns sums to at most 1.
class ProbRelation {
 public:
  ProbRelation() = default;
  ProbRelation(std::string name, Schema schema, std::vector<std::string> prob_key = {})
      : name_(std::move(name)), schema_(std::move(schema)), prob_key_names_(std::move(prob_key)) {
    if (!prob_key_names_.empty() && !schema_.probability_column()) {
      throw Error(ErrorKind::schema_mismatch,
                  "relation '" + name_ + "' has a probabilistic key but no probability column");
    }
    for (const auto& k : prob_key_names_) prob_key_.push_back(schema_.index_of(k));
  }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  const Schema& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<std::string>& prob_key() const { return prob_key_names_; }
  bool has_prob_key() const { return !prob_key_.empty(); }
  std::uint64_t version() const { return version_; }

  /// Inserts all rows or none. Coerces integer literals in real columns.
  void insert_rows(std::vector<Row> rows) {
    for (auto& row : rows) conform(row);
    if (has_prob_key()) {
      std::map<Row, double> touched;
      for (const auto& row : rows) {
        Row key = key_of(row);
        auto [it, fresh] = touched.try_emplace(std::move(key), 0.0);
        if (fresh) it->second = group_mass(it->first);
        it->second += as_real(row[*schema_.probability_column()]);
      }
      for (const auto& [key, mass] : touched) {
        if (mass > 1.0 + kMassTolerance) {
          throw Error(ErrorKind::constraint_violation, "relation '" + name_ + "' key group " +
                                                           render_key(key) + " would have mass " +
                                                           format_real(mass));
        }
      }
      for (auto& [key, mass] : touched) group_mass_[key] = mass;
    }
    rows_.reserve(rows_.size() + rows.size());
    for (auto& row : rows) rows_.push_back(std::move(row));
    version_ = detail::next_version();
  }

  void insert_row(Row row) {
    std::vector<Row> batch;
    batch.push_back(std::move(row));
    insert_rows(std::move(batch));
  }

  /// Total asserted probability of a key group; 0 for absent keys.
  double group_mass(const Row& key) const {
    if (!has_prob_key()) throw Error(ErrorKind::no_prob_key, "relation '" + name_ + "'");
    auto it = group_mass_.find(key);
    return it == group_mass_.end() ? 0.0 : it->second;
  }

  /// 1 minus the asserted mass of a key group; 1 for keys with no rows.
  double open_world_mass(const Row& key) const {
    return std::max(0.0, 1.0 - group_mass(key));
  }

  std::size_t column(std::string_view name) const { return schema_.index_of(name); }

  Row key_of(const Row& row) const {
    Row key;
    key.reserve(prob_key_.size());
    for (auto i : prob_key_) key.push_back(row[i]);
    return key;
  }

  /// Largest key-group mass; used by constraint scans.
  double max_group_mass() const {
    double m = 0.0;
    for (const auto& [k, v] : group_mass_) m = std::max(m, v);
    return m;
  }

 private:
  void conform(Row& row) const {
    if (row.size() != schema_.size()) {
      throw Error(ErrorKind::schema_mismatch, "relation '" + name_ + "' expects " +
                                                  std::to_string(schema_.size()) + " columns, got " +
                                                  std::to_string(row.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& col = schema_.columns()[i];
      auto& v = row[i];
      switch (col.type) {
        case ColumnType::integer:
          if (!std::holds_alternative<std::int64_t>(v)) mismatch(col);
          break;
        case ColumnType::real:
        case ColumnType::probability:
          if (std::holds_alternative<std::int64_t>(v)) v = static_cast<double>(std::get<std::int64_t>(v));
          if (!std::holds_alternative<double>(v)) mismatch(col);
          if (col.type == ColumnType::probability && !is_probability(std::get<double>(v))) {
            throw Error(ErrorKind::constraint_violation,
                        "relation '" + name_ + "' probability " + format_real(std::get<double>(v)) +
                            " outside [0,1]");
          }
          break;
        case ColumnType::text:
          if (!std::holds_alternative<std::string>(v)) mismatch(col);
          break;
      }
    }
  }

  [[noreturn]] void mismatch(const Column& col) const {
    throw Error(ErrorKind::schema_mismatch,
                "relation '" + name_ + "' column '" + col.name + "' expects " + std::string(to_string(col.type)));
  }

  static std::string render_key(const Row& key) {
    std::string out = "(";
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) out += x;
            else if constexpr (std::is_same_v<T, double>) out += format_real(x);
            else out += std::to_string(x);
          },
          key[i]);
    }
    return out + ")";
  }

  std::string name_;
  Schema schema_;
  std::vector<std::string> prob_key_names_;
  std::vector<std::size_t> prob_key_;
  std::vector<Row> rows_;
  std::map<Row, double> group_mass_;
  std::uint64_t version_ = detail::next_version();
};

/// Multiset equality of rows; real values compared with absolute tolerance.
inline bool bag_equal(const ProbRelation& a, const ProbRelation& b, double tol = 0.0) {
  if (!(a.schema() == b.schema()) || a.size() != b.size()) return false;
  auto ra = a.rows();
  auto rb = b.rows();
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    for (std::size_t j = 0; j < ra[i].size(); ++j) {
      const auto& x = ra[i][j];
      const auto& y = rb[i][j];
      if (std::holds_alternative<double>(x) && std::holds_alternative<double>(y)) {
        if (std::abs(std::get<double>(x) - std::get<double>(y)) > tol) return false;
      } else if (x != y) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Snapshots: RFC 4180 CSV plus a JSON sidecar with name, schema and key.

inline std::string sidecar_path(const std::string& path) { return path + ".meta.json"; }

inline std::string render_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) return x;
        else if constexpr (std::is_same_v<T, double>) return format_real(x);
        else return std::to_string(x);
      },
      v);
}

inline Value parse_value(const std::string& field, ColumnType type) {
  switch (type) {
    case ColumnType::integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::schema_mismatch, "bad integer '" + field + "'");
      }
      return v;
    }
    case ColumnType::real:
    case ColumnType::probability: {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size()) {
        throw Error(ErrorKind::schema_mismatch, "bad real '" + field + "'");
      }
      return v;
    }
    case ColumnType::text:
      return field;
  }
  return field;
}

inline void write_csv(const ProbRelation& rel, std::ostream& out) {
  std::vector<std::string> fields;
  for (const auto& c : rel.schema().columns()) fields.push_back(c.name);
  csv::write_record(out, fields);
  for (const auto& row : rel.rows()) {
    fields.clear();
    for (const auto& v : row) fields.push_back(render_value(v));
    csv::write_record(out, fields);
  }
}

inline nlohmann::json metadata_json(const ProbRelation& rel) {
  nlohmann::json meta;
  meta["name"] = rel.name();
  auto& schema = meta["schema"] = nlohmann::json::array();
  for (const auto& c : rel.schema().columns()) {
    schema.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
  }
  meta["prob_key"] = rel.prob_key();
  return meta;
}

inline void save_snapshot(const ProbRelation& rel, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path + "'");
    write_csv(rel, out);
    if (!out) throw Error(ErrorKind::io_error, "write failed for '" + path + "'");
  }
  std::ofstream meta(sidecar_path(path), std::ios::binary);
  if (!meta) throw Error(ErrorKind::io_error, "cannot write '" + sidecar_path(path) + "'");
  meta << metadata_json(rel).dump(2) << '\n';
}

/// Reads a snapshot and revalidates every row, including key-group masses.
inline ProbRelation load_snapshot(const std::string& path) {
  std::ifstream meta_in(sidecar_path(path), std::ios::binary);
  if (!meta_in) throw Error(ErrorKind::io_error, "cannot read '" + sidecar_path(path) + "'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_error, "bad metadata '" + sidecar_path(path) + "': " + e.what());
  }
  std::vector<Column> columns;
  for (const auto& c : meta.at("schema")) {
    columns.push_back({c.at("name").get<std::string>(), parse_column_type(c.at("type").get<std::string>())});
  }
  ProbRelation rel(meta.at("name").get<std::string>(), Schema(std::move(columns)),
                   meta.value("prob_key", std::vector<std::string>{}));

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot read '" + path + "'");
  csv::Reader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw Error(ErrorKind::io_error, "'" + path + "' has no header");
  const auto& cols = rel.schema().columns();
  if (fields.size() != cols.size()) throw Error(ErrorKind::schema_mismatch, "header width in '" + path + "'");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (fields[i] != cols[i].name) {
      throw Error(ErrorKind::schema_mismatch, "header column '" + fields[i] + "' in '" + path + "'");
    }
  }
  std::vector<Row> rows;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != cols.size()) throw Error(ErrorKind::schema_mismatch, "row width in '" + path + "'");
    Row row;
    row.reserve(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) row.push_back(parse_value(fields[i], cols[i].type));
    rows.push_back(std::move(row));
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

// ---------------------------------------------------------------------------
// Catalog of base relations and derived views.

using RelationPtr = std::shared_ptr<const ProbRelation>;
using ViewInputs = std::vector<RelationPtr>;
using ViewTransform = std::function<ProbRelation(const ViewInputs&)>;

struct ViewDef {
  std::string name;
  std::vector<std::string> inputs;
  ViewTransform transform;
};

/// Base relations are copy-on-write snapshots: readers hold a shared_ptr and
/// are never blocked by a writer. Views cache their last result together with
/// the versions of the inputs it was computed from.
class Store {
 public:
  void create(ProbRelation rel) {
    std::unique_lock lock(mutex_);
    if (views_.count(rel.name())) {
      throw Error(ErrorKind::invalid_config, "'" + rel.name() + "' is a view");
    }
    auto name = rel.name();
    relations_[name] = std::make_shared<const ProbRelation>(std::move(rel));
  }

  void insert_rows(const std::string& name, std::vector<Row> rows) {
    std::unique_lock lock(mutex_);
    auto it = relations_.find(name);
    if (it == relations_.end()) throw Error(ErrorKind::unknown_input, "no relation '" + name + "'");
    auto copy = std::make_shared<ProbRelation>(*it->second);
    copy->insert_rows(std::move(rows));
    it->second = std::move(copy);
  }

  bool contains(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return relations_.count(name) || views_.count(name);
  }

  RelationPtr relation(const std::string& name) const {
    std::shared_lock lock(mutex_);
    auto it = relations_.find(name);
    if (it == relations_.end()) throw Error(ErrorKind::unknown_input, "no relation '" + name + "'");
    return it->second;
  }

  void register_view(ViewDef def) {
    std::unique_lock lock(mutex_);
    if (relations_.count(def.name)) {
      throw Error(ErrorKind::invalid_config, "'" + def.name + "' is a base relation");
    }
    for (const auto& in : def.inputs) {
      if (in != def.name && !relations_.count(in) && !views_.count(in)) {
        throw Error(ErrorKind::unknown_input, "view '" + def.name + "' reads missing '" + in + "'");
      }
    }
    if (reaches(def.inputs, def.name)) {
      throw Error(ErrorKind::cycle_detected, "view '" + def.name + "'");
    }
    auto name = def.name;
    views_[name] = std::make_shared<const ViewDef>(std::move(def));
    cache_.erase(name);
  }

  /// Base relations are returned as-is; views are recomputed only when an
  /// input version changed, and materialized views always return the copy.
  RelationPtr evaluate(const std::string& name) {
    std::shared_ptr<const ViewDef> def;
    {
      std::shared_lock lock(mutex_);
      if (auto it = relations_.find(name); it != relations_.end()) return it->second;
      auto vit = views_.find(name);
      if (vit == views_.end()) throw Error(ErrorKind::unknown_input, "no relation or view '" + name + "'");
      def = vit->second;
      if (auto cit = cache_.find(name); cit != cache_.end() && cit->second.materialized) {
        return cit->second.result;
      }
    }
    ViewInputs inputs;
    std::vector<std::uint64_t> versions;
    for (const auto& in : def->inputs) {
      inputs.push_back(evaluate(in));
      versions.push_back(inputs.back()->version());
    }
    {
      std::shared_lock lock(mutex_);
      if (auto cit = cache_.find(name);
          cit != cache_.end() && cit->second.result && cit->second.input_versions == versions) {
        return cit->second.result;
      }
    }
    auto result = std::make_shared<ProbRelation>(def->transform(inputs));
    result->set_name(name);
    std::unique_lock lock(mutex_);
    auto& entry = cache_[name];
    if (entry.materialized) return entry.result;
    entry.result = std::move(result);
    entry.input_versions = std::move(versions);
    return entry.result;
  }

  void materialize(const std::string& name) {
    {
      std::shared_lock lock(mutex_);
      if (!views_.count(name)) throw Error(ErrorKind::unknown_view, name);
    }
    auto result = evaluate(name);
    std::unique_lock lock(mutex_);
    auto& entry = cache_[name];
    entry.result = std::move(result);
    entry.materialized = true;
  }

  void invalidate(const std::string& name) {
    std::unique_lock lock(mutex_);
    if (!views_.count(name)) throw Error(ErrorKind::unknown_view, name);
    cache_.erase(name);
  }

  bool is_materialized(const std::string& name) const {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(name);
    return it != cache_.end() && it->second.materialized;
  }

 private:
  struct CacheEntry {
    RelationPtr result;
    std::vector<std::uint64_t> input_versions;
    bool materialized = false;
  };

  bool reaches(const std::vector<std::string>& from, const std::string& target) const {
    std::vector<std::string> stack(from.begin(), from.end());
    std::unordered_set<std::string> seen;
    while (!stack.empty()) {
      auto cur = std::move(stack.back());
      stack.pop_back();
      if (cur == target) return true;
      if (!seen.insert(cur).second) continue;
      if (auto it = views_.find(cur); it != views_.end()) {
        for (const auto& in : it->second->inputs) stack.push_back(in);
      }
    }
    return false;
  }

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, RelationPtr> relations_;
  std::unordered_map<std::string, std::shared_ptr<const ViewDef>> views_;
  std::unordered_map<std::string, CacheEntry> cache_;
};

}  // namespace probhar
