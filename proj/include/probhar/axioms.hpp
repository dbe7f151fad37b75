#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "probhar/domain.hpp"
#include "probhar/observations.hpp"

namespace probhar {

enum class Provenance { learned, manual };

inline std::string_view to_string(Provenance p) { return p == Provenance::learned ? "learned" : "manual"; }

inline Provenance parse_provenance(std::string_view s) {
  if (s == "learned") return Provenance::learned;
  if (s == "manual") return Provenance::manual;
  throw Error(ErrorKind::constraint_violation, "unknown provenance '" + std::string(s) + "'");
}

using ActivityVector = std::array<double, kActivityCount>;

/// code -> probability of each of the five high-level activities. Whatever
/// the five leave over belongs to the null activity.
struct AxiomRow {
  Property property = Property::bho;
  std::string code;
  ActivityVector p{};
  Provenance provenance = Provenance::learned;

  double mass() const {
    double m = 0.0;
    for (double x : p) m += x;
    return m;
  }
  friend bool operator==(const AxiomRow&, const AxiomRow&) = default;
};

/// Returns a description of the first broken invariant, or nothing.
inline std::optional<std::string> check_row(const AxiomRow& row, Property property) {
  if (row.property != property) return "property mismatch for code '" + row.code + "'";
  try {
    validate_code(property, row.code);
  } catch (const Error& e) {
    return std::string(e.what());
  }
  for (std::size_t a = 0; a < kActivityCount; ++a) {
    if (!is_probability(row.p[a])) {
      return "p" + std::to_string(101 + a) + " of code '" + row.code + "' outside [0,1]";
    }
  }
  if (row.mass() > 1.0 + kMassTolerance) {
    return "probabilities of code '" + row.code + "' sum to " + format_real(row.mass());
  }
  return std::nullopt;
}

class AxiomTable {
 public:
  AxiomTable() = default;
  explicit AxiomTable(Property property, std::int64_t training_size = 0)
      : property_(property), training_size_(training_size) {}

  Property property() const { return property_; }
  std::int64_t training_size() const { return training_size_; }
  const std::map<std::string, AxiomRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  const AxiomRow* find(const std::string& code) const {
    auto it = rows_.find(code);
    return it == rows_.end() ? nullptr : &it->second;
  }

  void put(AxiomRow row) {
    if (auto err = check_row(row, property_)) throw Error(ErrorKind::constraint_violation, *err);
    auto code = row.code;
    rows_[code] = std::move(row);
  }

  /// Learned rows require a positive training size.
  void validate() const {
    for (const auto& [code, row] : rows_) {
      if (auto err = check_row(row, property_)) throw Error(ErrorKind::constraint_violation, *err);
      if (code != row.code) throw Error(ErrorKind::constraint_violation, "row key mismatch");
      if (row.provenance == Provenance::learned && training_size_ <= 0) {
        throw Error(ErrorKind::constraint_violation, "learned rows without a training size");
      }
    }
  }

  friend bool operator==(const AxiomTable&, const AxiomTable&) = default;

 private:
  Property property_ = Property::bho;
  std::int64_t training_size_ = 0;
  std::map<std::string, AxiomRow> rows_;
};

struct TruthCode {
  InstanceId id;
  std::string code;
};

/// The most probable LAP candidate of each instance stands in for the
/// missing location ground truth. Instances without candidates get "0000".
inline std::vector<TruthCode> prepare_lap_truth(const ObservationTable& obs) {
  std::vector<TruthCode> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    const auto& cands = o.lap.candidates;
    if (cands.empty()) {
      out.push_back({o.id, "0000"});
      continue;
    }
    auto best = std::min_element(cands.begin(), cands.end(), candidate_order);
    out.push_back({o.id, best->value});
  }
  return out;
}

inline std::vector<TruthCode> bho_truth_from(const std::vector<TrainingLabel>& labels) {
  std::vector<TruthCode> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back({l.id, l.bho});
  return out;
}

struct ActivityLabel {
  InstanceId id;
  Activity activity = Activity::null;
};

inline std::vector<ActivityLabel> activity_labels_from(const std::vector<TrainingLabel>& labels) {
  std::vector<ActivityLabel> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back({l.id, l.activity});
  return out;
}

struct LearnOptions {
  /// Additive constant in the denominator; defaults to the training size N.
  std::optional<std::int64_t> smoothing_denominator;
};

/// Naive-Bayes style axiom learning with additive smoothing:
///   p_a(c) = (count(a and c) + 1) / (count(c) + N)
/// over the instances present in both `truth` and `labels`. Null-labelled
/// instances count toward N and count(c) but toward no activity.
inline AxiomTable learn_axioms(const std::vector<TruthCode>& truth, const std::vector<ActivityLabel>& labels,
                               Property property, const LearnOptions& opts = {}) {
  std::unordered_map<std::int64_t, Activity> label_of;
  label_of.reserve(labels.size());
  for (const auto& l : labels) label_of[l.id.value] = l.activity;

  struct Counts {
    std::int64_t total = 0;
    std::array<std::int64_t, kActivityCount> per_activity{};
  };
  std::map<std::string, Counts> counts;
  std::int64_t n = 0;
  for (const auto& t : truth) {
    auto it = label_of.find(t.id.value);
    if (it == label_of.end()) continue;
    ++n;
    auto& c = counts[t.code];
    ++c.total;
    if (it->second != Activity::null) ++c.per_activity[index_of(it->second)];
  }
  if (n == 0) throw Error(ErrorKind::empty_training_set, std::string(to_string(property)) + " axioms");
  const std::int64_t denominator_constant = opts.smoothing_denominator.value_or(n);
  // A row sums to (count(c) + 5) / (count(c) + constant), so fewer than five
  // would break the per-code mass bound.
  if (denominator_constant < static_cast<std::int64_t>(kActivityCount)) {
    throw Error(opts.smoothing_denominator ? ErrorKind::invalid_config : ErrorKind::empty_training_set,
                std::string(to_string(property)) + " axioms need a smoothing constant of at least 5, got " +
                    std::to_string(denominator_constant));
  }

  AxiomTable table(property, n);
  for (const auto& [code, c] : counts) {
    AxiomRow row{property, code, {}, Provenance::learned};
    const double denom = static_cast<double>(c.total + denominator_constant);
    for (std::size_t a = 0; a < kActivityCount; ++a) {
      row.p[a] = static_cast<double>(c.per_activity[a] + 1) / denom;
    }
    table.put(std::move(row));
  }
  return table;
}

/// Validates every edit first; any failure rejects the whole list and names
/// each offending edit.
inline AxiomTable apply_manual_overrides(const AxiomTable& table, const std::vector<AxiomRow>& edits) {
  std::string problems;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (auto err = check_row(edits[i], table.property())) {
      problems += (problems.empty() ? "" : "; ") + ("edit " + std::to_string(i) + ": " + *err);
    }
  }
  if (!problems.empty()) throw Error(ErrorKind::constraint_violation, problems);
  AxiomTable out = table;
  for (auto row : edits) {
    row.provenance = Provenance::manual;
    out.put(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON document: {property, training_size, rows:[{code, p101..p105, provenance}]}

inline nlohmann::json axioms_to_json(const AxiomTable& table) {
  nlohmann::json doc;
  doc["property"] = std::string(to_string(table.property()));
  doc["training_size"] = table.training_size();
  auto& rows = doc["rows"] = nlohmann::json::array();
  for (const auto& [code, row] : table.rows()) {
    nlohmann::json r;
    r["code"] = code;
    for (std::size_t a = 0; a < kActivityCount; ++a) r["p" + std::to_string(101 + a)] = row.p[a];
    r["provenance"] = std::string(to_string(row.provenance));
    rows.push_back(std::move(r));
  }
  return doc;
}

inline AxiomRow axiom_row_from_json(const nlohmann::json& r, Property property) {
  AxiomRow row;
  row.property = property;
  row.code = r.at("code").get<std::string>();
  for (std::size_t a = 0; a < kActivityCount; ++a) {
    row.p[a] = r.value("p" + std::to_string(101 + a), 0.0);
  }
  row.provenance = parse_provenance(r.value("provenance", std::string("manual")));
  return row;
}

/// Parses and validates an axiom document.
inline AxiomTable axioms_from_json(const nlohmann::json& doc) {
  try {
    const Property property = parse_property(doc.at("property").get<std::string>());
    AxiomTable table(property, doc.value("training_size", std::int64_t{0}));
    for (const auto& r : doc.at("rows")) table.put(axiom_row_from_json(r, property));
    table.validate();
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::constraint_violation, std::string("bad axiom document: ") + e.what());
  }
}

inline void save_axioms(const AxiomTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path + "'");
  out << axioms_to_json(table).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io_error, "write failed for '" + path + "'");
}

inline AxiomTable load_axioms(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot read '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_error, "bad JSON in '" + path + "': " + e.what());
  }
  return axioms_from_json(doc);
}

}  // namespace probhar
