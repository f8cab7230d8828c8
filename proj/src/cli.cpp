#include "sgsg/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "sgsg/harness.hpp"
#include "sgsg/svg.hpp"

namespace sgsg {

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

TrainConfig load_config(const CommonArgs& args) {
  TrainConfig cfg = parse_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void add_seed_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&args](std::uint64_t v) {
        args.seed = v;
        args.seed_set = true;
      },
      "Override the config's RNG seed");
}

SgsgModel<float> load_model(const TrainConfig& cfg, const std::string& checkpoint) {
  SgsgModel<float> model(model_options(cfg), cfg.seed);
  load_checkpoint(checkpoint, model.params());
  return model;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Scene-gated social-graph pedestrian trajectory forecasting"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string held_out, merge, checkpoint, out_dir = "sgsg_out";
  std::string grid_path, raster_out, dump_path;
  bool no_scene = false, no_sg = false, no_vae = false;
  bool teacher_forcing = false, prior_sampling = false, gcn_self_loop = false;
  int k = 20;
  int classes = 3;
  double meters_per_cell = 1.0, origin_x = 0.0, origin_y = 0.0;

  auto* cmd_train = app.add_subcommand("train", "Train a model on the leave-one-out split");
  cmd_train->add_option("--config", common.config_path, "key=value run configuration")->required();
  cmd_train->add_option("--held-out", held_out, "Scene to hold out for testing");
  add_seed_option(cmd_train, common);
  cmd_train->add_option("--merge", merge, "Feature merge: gating|add|concat");
  cmd_train->add_flag("--no-scene", no_scene, "Disable the scene encoder");
  cmd_train->add_flag("--no-sg", no_sg, "Disable the social graph encoder");
  cmd_train->add_flag("--no-vae", no_vae, "Disable the VAE (single-mode output)");
  cmd_train->add_flag("--teacher-forcing", teacher_forcing, "Feed ground truth to the decoder");
  cmd_train->add_flag("--prior-sampling", prior_sampling, "Sample z from N(0,I) at inference");
  cmd_train->add_flag("--gcn-self-loop", gcn_self_loop, "Include the POI in its own aggregation");
  cmd_train->add_option("--out", out_dir, "Output directory (checkpoint + training log)");

  auto* cmd_eval = app.add_subcommand("evaluate", "Best-of-K ADE/FDE on the held-out scene");
  cmd_eval->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  cmd_eval->add_option("--config", common.config_path, "key=value run configuration")->required();
  cmd_eval->add_option("--k", k, "Samples per window (1, 20, 100, ...)")
      ->check(CLI::PositiveNumber);
  add_seed_option(cmd_eval, common);
  cmd_eval->add_option("--out", out_dir, "Output directory (metrics.csv)");

  auto* cmd_predict = app.add_subcommand("predict", "Dump per-window trajectory samples to CSV");
  cmd_predict->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  cmd_predict->add_option("--config", common.config_path, "key=value run configuration")
      ->required();
  cmd_predict->add_option("--k", k, "Samples per window")->check(CLI::PositiveNumber);
  add_seed_option(cmd_predict, common);
  cmd_predict->add_option("--out", out_dir, "Output directory (predictions.csv)");

  auto* cmd_raster = app.add_subcommand(
      "rasterize-scene", "Convert a text label grid (digits per cell) into a binary raster");
  cmd_raster->add_option("--grid", grid_path, "Label grid: H lines of W class digits")->required();
  cmd_raster->add_option("--out", raster_out, "Raster output path")->required();
  cmd_raster->add_option("--classes", classes, "Number of semantic classes")
      ->check(CLI::PositiveNumber);
  cmd_raster->add_option("--meters-per-cell", meters_per_cell, "Cell edge length in meters");
  cmd_raster->add_option("--origin-x", origin_x, "World x of cell (0,0)");
  cmd_raster->add_option("--origin-y", origin_y, "World y of cell (0,0)");

  auto* cmd_stats = app.add_subcommand(
      "graph-stats", "Per-frame star vs complete graph edge counts, as CSV");
  cmd_stats->add_option("--config", common.config_path, "key=value run configuration")->required();
  cmd_stats->add_option("--out", dump_path, "CSV output path (default: stdout)");

  auto* cmd_plot = app.add_subcommand("plot", "Render a predictions dump as one SVG per scene");
  cmd_plot->add_option("--input", dump_path, "predictions.csv from the predict subcommand")
      ->required();
  cmd_plot->add_option("--out", out_dir, "Output directory for SVG files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (cmd_train->parsed()) {
      TrainConfig cfg = load_config(common);
      if (!held_out.empty()) cfg.held_out = held_out;
      if (!merge.empty()) cfg.merge = parse_merge_mode(merge);
      if (no_scene) cfg.use_scene = false;
      if (no_sg) cfg.use_social = false;
      if (no_vae) cfg.use_vae = false;
      if (teacher_forcing) cfg.teacher_forcing = true;
      if (prior_sampling) cfg.prior_sampling = true;
      if (gcn_self_loop) cfg.gcn_self_loop = true;
      cfg.validate();
      const DataBundle bundle = load_data(cfg);
      const TrainResult result = train(cfg, bundle, out_dir);
      std::cout << "trained " << result.epochs_run << " epochs over "
                << bundle.train_windows.size() << " windows; checkpoint: "
                << result.checkpoint.string() << "\n";
      return 0;
    }
    if (cmd_eval->parsed()) {
      TrainConfig cfg = load_config(common);
      const DataBundle bundle = load_data(cfg);
      const SgsgModel<float> model = load_model(cfg, checkpoint);
      const EvalResult result = evaluate(model, bundle, k, cfg.seed);
      std::filesystem::create_directories(out_dir);
      const auto csv = std::filesystem::path(out_dir) / "metrics.csv";
      write_metrics_csv(csv, result.report);
      for (const auto& sm : result.report.per_scene) {
        std::cout << sm.scene << " k=" << k << " ade=" << sm.ade_m << "m fde=" << sm.fde_m
                  << "m (baseline " << sm.baseline_ade_m << "/" << sm.baseline_fde_m << "m, "
                  << sm.n_windows << " windows)\n";
      }
      std::cerr << "wall time: " << result.report.wall_seconds << "s\n";
      return 0;
    }
    if (cmd_predict->parsed()) {
      TrainConfig cfg = load_config(common);
      const DataBundle bundle = load_data(cfg);
      const SgsgModel<float> model = load_model(cfg, checkpoint);
      std::filesystem::create_directories(out_dir);
      const auto csv = std::filesystem::path(out_dir) / "predictions.csv";
      write_predictions_csv(csv, model, bundle, k, cfg.seed);
      std::cout << "wrote " << csv.string() << "\n";
      return 0;
    }
    if (cmd_raster->parsed()) {
      std::ifstream grid(grid_path);
      if (!grid) throw FormatError("cannot open label grid: " + grid_path);
      const SceneRaster raster =
          raster_from_text(grid, grid_path, classes, meters_per_cell, {origin_x, origin_y});
      save_raster(raster_out, raster);
      std::cout << "wrote " << raster_out << " (" << raster.channels << "x" << raster.height
                << "x" << raster.width << ")\n";
      return 0;
    }
    if (cmd_stats->parsed()) {
      TrainConfig cfg = load_config(common);
      std::map<std::string, LoadedScene> scenes;
      for (const auto& spec : cfg.scenes) {
        LoadedScene ls;
        ls.data = load_scene(spec.name, spec.annotations);
        scenes.emplace(spec.name, std::move(ls));
      }
      if (dump_path.empty()) {
        write_graph_stats_csv(std::cout, scenes);
      } else {
        std::ofstream out(dump_path);
        if (!out) throw FormatError("cannot write csv: " + dump_path);
        write_graph_stats_csv(out, scenes);
      }
      return 0;
    }
    if (cmd_plot->parsed()) {
      const int n = plot_predictions(dump_path, out_dir);
      std::cout << "wrote " << n << " svg file(s) under " << out_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("sgsg");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sgsg
