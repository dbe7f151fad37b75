// Command-line front end: one subcommand per pipeline stage, plus the full
// pipeline and the HTTP service used by the axiom editor.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <csignal>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "probhar/dataset_io.hpp"
#include "probhar/pipeline.hpp"
#include "probhar/service.hpp"

namespace fs = std::filesystem;
using namespace probhar;

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string config;
};

PipelineConfig resolve(const CommonFlags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

void write_json(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Scenario seed");
  cmd->add_option("--config", f.config, "key=value config file");
}

Dataset dataset_for(const std::string& data_dir, const PipelineConfig& cfg) {
  if (!data_dir.empty()) return load_dataset(data_dir);
  return dataset_from(generate(cfg.scenario()));
}

int run_stage(const std::string& stage, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    std::cerr << "probhar " << stage << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::io_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "probhar " << stage << ": " << e.what() << '\n';
    return 1;
  }
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic high-level activity recognition pipeline"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string out;
  std::string data_dir;
  std::string property = "BHO";
  int half_width = 0;
  bool test_only = false;
  std::string bho_axioms;
  std::string lap_axioms;
  std::string predictions;
  std::string final_path;
  std::string labels;
  std::optional<double> tolerance;
  std::string host = "127.0.0.1";
  int port = 8080;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset directory");
  add_common(gen, common);
  gen->add_option("--out", out, "Output directory")->required();

  auto* ingest = app.add_subcommand("ingest", "Validate and prune a dataset directory");
  add_common(ingest, common);
  ingest->add_option("--data", data_dir, "Input dataset directory")->required();
  ingest->add_option("--out", out, "Output directory")->required();

  auto* smooth = app.add_subcommand("smooth", "Smooth one property with the probabilistic mode");
  add_common(smooth, common);
  smooth->add_option("--data", data_dir, "Input dataset directory")->required();
  smooth->add_option("--property", property, "LAP or BHO");
  smooth->add_option("--half-width", half_width, "Window half-width (default per property)");
  smooth->add_flag("--test-only", test_only, "Only smooth test serials (BHO default)");
  smooth->add_option("--out", out, "Output directory")->required();

  auto* learn = app.add_subcommand("learn", "Learn axioms for one property");
  add_common(learn, common);
  learn->add_option("--data", data_dir, "Dataset directory (smoothed)")->required();
  learn->add_option("--property", property, "LAP or BHO");
  learn->add_option("--out", out, "Axiom JSON file")->required();

  auto* infer = app.add_subcommand("infer", "Score test instances");
  add_common(infer, common);
  infer->add_option("--data", data_dir, "Dataset directory (smoothed)")->required();
  infer->add_option("--bho-axioms", bho_axioms)->required();
  infer->add_option("--lap-axioms", lap_axioms)->required();
  infer->add_option("--out", out, "Predictions CSV")->required();

  auto* segment = app.add_subcommand("segment", "Build the final timeline");
  add_common(segment, common);
  segment->add_option("--predictions", predictions)->required();
  segment->add_option("--out", out, "Final ontology CSV")->required();

  auto* eval = app.add_subcommand("eval", "Score a final timeline against labels");
  add_common(eval, common);
  eval->add_option("--final", final_path)->required();
  eval->add_option("--predictions", predictions)->required();
  eval->add_option("--labels", labels, "labels.csv (instance_id, activity)")->required();
  eval->add_option("--tolerance", tolerance, "Tolerance window in seconds");
  eval->add_option("--out", out, "Report JSON")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write a run record");
  add_common(pipeline, common);
  pipeline->add_option("--data", data_dir, "Dataset directory (default: generate)");
  pipeline->add_option("--out", out, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Serve the axiom-editor HTTP API");
  add_common(serve, common);
  serve->add_option("--data", data_dir, "Dataset directory (default: generate)");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*gen) {
    return run_stage("gen", [&] {
      auto cfg = resolve(common);
      save_dataset(dataset_from(generate(cfg.scenario())), out);
    });
  }
  if (*ingest) {
    return run_stage("ingest", [&] {
      auto cfg = resolve(common);
      auto data = load_dataset(data_dir);
      data.observations = prune_all(std::move(data.observations), cfg.prune());
      save_dataset(data, out);
    });
  }
  if (*smooth) {
    return run_stage("smooth", [&] {
      auto cfg = resolve(common);
      const Property p = parse_property(property);
      SmoothingConfig sc = p == Property::lap ? cfg.lap_smoothing() : cfg.bho_smoothing();
      if (half_width > 0) sc.half_width = half_width;
      if (test_only) sc.test_serials_only = true;
      auto data = load_dataset(data_dir);
      data.observations = smooth_property(data.observations, sc);
      save_dataset(data, out);
    });
  }
  if (*learn) {
    return run_stage("learn", [&] {
      const Property p = parse_property(property);
      auto data = load_dataset(data_dir);
      const auto training_obs = filter_serials(data.observations, false);
      const auto acts = activity_labels_from(data.training);
      auto table = p == Property::lap ? learn_axioms(prepare_lap_truth(training_obs), acts, p)
                                      : learn_axioms(bho_truth_from(data.training), acts, p);
      save_axioms(table, out);
    });
  }
  if (*infer) {
    return run_stage("infer", [&] {
      auto cfg = resolve(common);
      auto obs = filter_serials(load_observations(data_dir), true);
      if (cfg.first_choice_only) obs = first_choice(std::move(obs));
      auto preds = predict_all(obs, load_axioms(bho_axioms), load_axioms(lap_axioms), cfg.weights,
                               {cfg.strict_pairs});
      save_snapshot(predictions_relation(preds), out);
    });
  }
  if (*segment) {
    return run_stage("segment", [&] {
      auto cfg = resolve(common);
      auto preds = predictions_from(load_snapshot(predictions));
      auto segs = rearrange(labels_of(preds));
      if (cfg.eliminate) segs = three_step_eliminate(segs, cfg.elimination());
      save_snapshot(final_relation(segs), out);
    });
  }
  if (*eval) {
    return run_stage("eval", [&] {
      auto cfg = resolve(common);
      if (tolerance) cfg.hl_tolerance = *tolerance;
      auto preds = predictions_from(load_snapshot(predictions));
      auto segs = segments_from(load_snapshot(final_path));
      ObservationTable frame;
      for (const auto& p : preds) frame.push_back(make_observation(p.instance, p.serial, p.t_start));
      std::vector<LabeledInstance> truth;
      for (const auto& t : truth_from_labels(load_snapshot(labels), frame, true)) {
        truth.push_back({t.id, t.serial, t.t_start, t.activity});
      }
      write_json(report_to_json(evaluate(preds, segs, truth, cfg.hl_eval())), out);
    });
  }
  if (*pipeline) {
    return run_stage("pipeline", [&] {
      auto cfg = resolve(common);
      const Dataset data = dataset_for(data_dir, cfg);
      const auto prep = prepare(data, cfg);
      auto result = infer_and_evaluate(prep, data.truth, cfg, prep.timings);
      result.record.run_id = "cli";
      std::error_code ec;
      fs::create_directories(out, ec);
      if (ec) throw Error(ErrorKind::io_error, "cannot create '" + out + "'");
      const fs::path dir(out);
      write_json(report_to_json(result.record.report), (dir / "report.json").string());
      write_json(record_to_json(result.record), (dir / "run.json").string());
      save_snapshot(predictions_relation(result.predictions), (dir / "predictions.csv").string());
      save_snapshot(final_relation(result.final_segments), (dir / "final.csv").string());
      save_axioms(prep.bho_axioms, (dir / "bho_axioms.json").string());
      save_axioms(prep.lap_axioms, (dir / "lap_axioms.json").string());
      std::cout << "weighted_f " << result.record.report.weighted_f << "  ratio " << result.record.ratio << '\n';
    });
  }
  if (*serve) {
    return run_stage("serve", [&] {
      auto cfg = resolve(common);
      Service service(dataset_for(data_dir, cfg), cfg);
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::cerr << "listening on " << host << ":" << port << '\n';
      if (!server.listen(host, port)) throw Error(ErrorKind::io_error, "cannot listen on port " + std::to_string(port));
    });
  }
  return 1;
}
