#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>

#include "probhar/pipeline.hpp"

namespace probhar {

// A dataset directory holds relation snapshots (CSV + .meta.json):
//   instances.csv   instance_id, serial, t_start
//   candidates.csv  instance_id, serial, t_start, property, code, pr
//   training.csv    instance_id, activity, bho        (training serials)
//   labels.csv      instance_id, activity             (ground truth)
//   truth.csv       instance_id, serial, t_start, activity, lap, bho

inline ProbRelation truth_relation(const std::vector<TruthRow>& truth, std::string name = "truth") {
  ProbRelation rel(std::move(name), Schema{{"instance_id", ColumnType::integer},
                                           {"serial", ColumnType::integer},
                                           {"t_start", ColumnType::real},
                                           {"activity", ColumnType::integer},
                                           {"lap", ColumnType::text},
                                           {"bho", ColumnType::text}});
  std::vector<Row> rows;
  rows.reserve(truth.size());
  for (const auto& t : truth) {
    rows.push_back({Value{t.id.value}, Value{std::int64_t{t.serial.value()}}, Value{t.t_start},
                    Value{std::int64_t{code_of(t.activity)}}, Value{t.lap}, Value{t.bho}});
  }
  rel.insert_rows(std::move(rows));
  return rel;
}

inline std::vector<TruthRow> truth_from(const ProbRelation& rel) {
  const auto id = rel.column("instance_id");
  const auto serial = rel.column("serial");
  const auto t = rel.column("t_start");
  const auto act = rel.column("activity");
  const auto lap = rel.column("lap");
  const auto bho = rel.column("bho");
  std::vector<TruthRow> out;
  out.reserve(rel.size());
  for (const auto& row : rel.rows()) {
    out.push_back({InstanceId{as_int(row[id])}, SerialCode::from_int(as_int(row[serial])), as_real(row[t]),
                   activity_from_code(as_int(row[act])), as_text(row[lap]), as_text(row[bho])});
  }
  return out;
}

/// Truth rows rebuilt from a labels file plus the instance table. Labels for
/// instances outside `obs` are an error unless `skip_unknown` is set.
inline std::vector<TruthRow> truth_from_labels(const ProbRelation& labels, const ObservationTable& obs,
                                               bool skip_unknown = false) {
  std::unordered_map<std::int64_t, const Observation*> by_id;
  for (const auto& o : obs) by_id[o.id.value] = &o;
  const auto id = labels.column("instance_id");
  const auto act = labels.column("activity");
  std::vector<TruthRow> out;
  for (const auto& row : labels.rows()) {
    auto it = by_id.find(as_int(row[id]));
    if (it == by_id.end()) {
      if (skip_unknown) continue;
      throw Error(ErrorKind::instance_mismatch, "label for unknown instance " + std::to_string(as_int(row[id])));
    }
    out.push_back({it->second->id, it->second->serial, it->second->t_start, activity_from_code(as_int(row[act]))});
  }
  return out;
}

inline void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create '" + dir.string() + "'");
  save_snapshot(instances_relation(data.observations), (dir / "instances.csv").string());
  save_snapshot(candidates_relation(data.observations), (dir / "candidates.csv").string());
  save_snapshot(training_relation(data.training), (dir / "training.csv").string());
  if (!data.truth.empty()) {
    save_snapshot(truth_labels_relation(data.truth), (dir / "labels.csv").string());
    save_snapshot(truth_relation(data.truth), (dir / "truth.csv").string());
  }
}

inline ObservationTable load_observations(const std::filesystem::path& dir) {
  return observations_from(load_snapshot((dir / "instances.csv").string()),
                           load_snapshot((dir / "candidates.csv").string()));
}

/// Missing training/labels/truth files leave those parts empty.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset data;
  data.observations = load_observations(dir);
  if (std::filesystem::exists(dir / "training.csv")) {
    data.training = training_labels_from(load_snapshot((dir / "training.csv").string()));
  }
  if (std::filesystem::exists(dir / "truth.csv")) {
    data.truth = truth_from(load_snapshot((dir / "truth.csv").string()));
  } else if (std::filesystem::exists(dir / "labels.csv")) {
    data.truth = truth_from_labels(load_snapshot((dir / "labels.csv").string()), data.observations);
  }
  return data;
}

}  // namespace probhar
