#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "probhar/pipeline.hpp"

namespace probhar {

inline constexpr std::array<std::string_view, kObjectCount> kObjectNames = {
    "idle",     "door 1",   "door 2",   "drawer 1", "drawer 2", "drawer 3",      "dishwasher", "cup",
    "glass",    "plate",    "knife 1",  "knife 2",  "spoon",    "bread",         "salami",     "cheese",
    "milk",     "sugar",    "water bottle", "lazy chair", "fridge", "light switch", "table",   "chair"};

/// Backs the axiom editor: versioned axiom tables plus asynchronous runs of
/// inference, segmentation and evaluation over a prepared dataset.
class Service {
 public:
  Service(const Dataset& data, PipelineConfig cfg)
      : cfg_(std::move(cfg)), prepared_(prepare(data, cfg_)), truth_(data.truth) {
    tables_[index(Property::bho)] = {prepared_.bho_axioms, 1};
    tables_[index(Property::lap)] = {prepared_.lap_axioms, 1};
  }

  ~Service() {
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(runs_mutex_);
      workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  struct Reply {
    int status = 200;
    nlohmann::json body;
  };

  Reply get_axioms(Property p) const {
    std::shared_lock lock(axiom_mutex_);
    const auto& v = tables_[index(p)];
    auto doc = axioms_to_json(v.table);
    doc["version"] = v.version;
    return {200, doc};
  }

  /// Full replacement of one table. The body carries the version token it
  /// was based on; a stale token is a conflict.
  Reply put_axioms(Property p, const std::string& body) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return {400, {{"error", "malformed-json"}, {"message", e.what()}}};
    }
    if (!doc.is_object() || !doc.contains("version") || !doc["version"].is_number_unsigned()) {
      return {400, {{"error", "missing-version"}, {"message", "body needs the version token from GET"}}};
    }
    if (doc.value("property", std::string(to_string(p))) != to_string(p)) {
      return {400, {{"error", "constraint-violation"}, {"message", "property does not match the URL"}}};
    }
    if (!doc.contains("rows") || !doc["rows"].is_array()) {
      return {400, {{"error", "constraint-violation"}, {"message", "rows must be an array"}}};
    }
    AxiomTable table(p, doc.value("training_size", std::int64_t{0}));
    nlohmann::json problems = nlohmann::json::array();
    for (std::size_t i = 0; i < doc["rows"].size(); ++i) {
      const auto& r = doc["rows"][i];
      try {
        auto row = axiom_row_from_json(r, p);
        if (auto err = check_row(row, p)) {
          problems.push_back({{"index", i}, {"code", row.code}, {"message", *err}});
        } else {
          table.put(std::move(row));
        }
      } catch (const std::exception& e) {
        problems.push_back({{"index", i}, {"message", e.what()}});
      }
    }
    if (problems.empty()) {
      try {
        table.validate();
      } catch (const Error& e) {
        problems.push_back({{"message", e.what()}});
      }
    }
    if (!problems.empty()) return {400, {{"error", "constraint-violation"}, {"rows", problems}}};

    std::unique_lock lock(axiom_mutex_);
    auto& current = tables_[index(p)];
    if (doc["version"].get<std::uint64_t>() != current.version) {
      return {409, {{"error", "version-conflict"}, {"version", current.version}}};
    }
    current.table = std::move(table);
    ++current.version;
    return {200, {{"version", current.version}}};
  }

  Reply start_run() {
    AxiomTable bho;
    AxiomTable lap;
    {
      std::shared_lock lock(axiom_mutex_);
      bho = tables_[index(Property::bho)].table;
      lap = tables_[index(Property::lap)].table;
    }
    std::lock_guard lock(runs_mutex_);
    const int id = next_run_id_++;
    runs_[id] = std::make_shared<RunSlot>();
    workers_.emplace_back([this, id, bho = std::move(bho), lap = std::move(lap)]() mutable {
      execute(id, std::move(bho), std::move(lap));
    });
    return {202, {{"id", id}}};
  }

  Reply get_run(int id) const {
    std::shared_ptr<RunSlot> slot;
    {
      std::lock_guard lock(runs_mutex_);
      auto it = runs_.find(id);
      if (it == runs_.end()) return {404, {{"error", "unknown-run"}, {"id", id}}};
      slot = it->second;
    }
    std::lock_guard lock(slot->mutex);
    nlohmann::json body{{"id", id}, {"status", slot->status}};
    if (slot->status == "done") {
      body["record"] = slot->record;
      body["report"] = slot->record["report"];
    }
    if (slot->status == "failed") body["error"] = slot->error;
    return {200, body};
  }

  static nlohmann::json activities() {
    auto out = nlohmann::json::array();
    out.push_back({{"code", 0}, {"name", activity_name(Activity::null)}});
    for (Activity a : kActivities) out.push_back({{"code", code_of(a)}, {"name", activity_name(a)}});
    return out;
  }

  static nlohmann::json objects() {
    auto out = nlohmann::json::array();
    for (int i = 0; i < kObjectCount; ++i) out.push_back({{"id", i}, {"name", kObjectNames[static_cast<std::size_t>(i)]}});
    return out;
  }

  void mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(r.body.dump(), "application/json");
    };
    auto property_of = [](const httplib::Request& req) { return parse_property(req.matches[1].str()); };
    server.Get(R"(/axioms/(LAP|BHO|lap|bho))", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, get_axioms(property_of(req)));
    });
    server.Put(R"(/axioms/(LAP|BHO|lap|bho))", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, put_axioms(property_of(req), req.body));
    });
    server.Get("/meta/activities", [=](const httplib::Request&, httplib::Response& res) {
      send(res, {200, activities()});
    });
    server.Get("/meta/objects", [=](const httplib::Request&, httplib::Response& res) {
      send(res, {200, objects()});
    });
    server.Post("/runs", [=, this](const httplib::Request&, httplib::Response& res) { send(res, start_run()); });
    server.Get(R"(/runs/(\d+))", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, get_run(std::stoi(req.matches[1].str())));
    });
    server.set_error_handler([=](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(nlohmann::json{{"error", "not-found"}}.dump(), "application/json");
      }
    });
  }

  const PipelineConfig& config() const { return cfg_; }

 private:
  struct VersionedTable {
    AxiomTable table;
    std::uint64_t version = 0;
  };

  struct RunSlot {
    std::mutex mutex;
    std::string status = "pending";
    nlohmann::json record;
    std::string error;
  };

  static std::size_t index(Property p) { return p == Property::bho ? 0 : 1; }

  void execute(int id, AxiomTable bho, AxiomTable lap) {
    std::shared_ptr<RunSlot> slot;
    {
      std::lock_guard lock(runs_mutex_);
      slot = runs_.at(id);
    }
    std::lock_guard exclusive(run_exec_mutex_);  // one run at a time
    {
      std::lock_guard lock(slot->mutex);
      slot->status = "running";
    }
    try {
      Prepared prep;
      prep.smoothed = prepared_.smoothed;
      prep.raw = prepared_.raw;
      prep.bho_axioms = std::move(bho);
      prep.lap_axioms = std::move(lap);
      auto result = infer_and_evaluate(prep, truth_, cfg_);
      result.record.run_id = std::to_string(id);
      auto json = record_to_json(result.record);
      std::lock_guard lock(slot->mutex);
      slot->record = std::move(json);
      slot->status = "done";
    } catch (const std::exception& e) {
      std::lock_guard lock(slot->mutex);
      slot->error = e.what();
      slot->status = "failed";
    }
  }

  PipelineConfig cfg_;
  Prepared prepared_;
  std::vector<TruthRow> truth_;

  mutable std::shared_mutex axiom_mutex_;
  std::array<VersionedTable, 2> tables_;

  mutable std::mutex runs_mutex_;
  std::map<int, std::shared_ptr<RunSlot>> runs_;
  std::vector<std::thread> workers_;
  int next_run_id_ = 1;
  std::mutex run_exec_mutex_;
};

}  // namespace probhar
