#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgsg/config.hpp"
#include "sgsg/metrics.hpp"
#include "sgsg/model.hpp"

namespace sgsg {

/// Scene-keyed normalization: one global fit on the training windows by
/// default, or per-scene bounds when configured.
struct Normalizer {
  bool per_scene = false;
  NormParams global;
  std::map<std::string, NormParams> scenes;

  const NormParams& for_scene(const std::string& name) const {
    if (!per_scene) return global;
    auto it = scenes.find(name);
    if (it == scenes.end()) throw ConfigError("no normalization fitted for scene " + name);
    return it->second;
  }
};

struct LoadedScene {
  SceneData data;
  SceneRaster raster;
};

/// Everything a run needs: scenes (including rotated training copies),
/// split windows, and fitted normalization.
struct DataBundle {
  std::map<std::string, LoadedScene> scenes;
  std::vector<TrajWindow> train_windows;
  std::vector<TrajWindow> test_windows;
  Normalizer norm;
  std::string test_scene;
};

/// Splits, augments, caps, and fits normalization over already-loaded scenes.
DataBundle assemble_bundle(const TrainConfig& cfg, std::map<std::string, LoadedScene> scenes);

/// Loads scenes from the config's manifest and assembles the bundle. Rasters
/// are only read when the scene encoder is enabled.
DataBundle load_data(const TrainConfig& cfg);

ModelOptions model_options(const TrainConfig& cfg);

/// Normalized model inputs for one window of the bundle.
ModelInput make_input(const DataBundle& bundle, const TrajWindow& w, bool with_raster);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_ade = -1.0;  // negative when no validation split
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log_csv;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  int epochs_run = 0;
};

/// Epochs of seeded shuffled mini-batches with Adam updates; keeps the
/// checkpoint with the best validation ADE (the final one when no validation
/// split is configured). Aborts with the offending window ids on a
/// non-finite loss.
TrainResult train(const TrainConfig& cfg, const DataBundle& bundle,
                  const std::filesystem::path& out_dir, SgsgModel<float>* model_out = nullptr);

struct WindowEval {
  std::string scene;
  long poi = 0;
  long start_frame = 0;
  double min_ade = 0.0;
  double min_fde = 0.0;
  double baseline_ade = 0.0;
  double baseline_fde = 0.0;
  double mean_sigma = 0.0;  // mean posterior sigma; 0 without the VAE
};

struct SceneMetrics {
  std::string scene;
  double ade_m = 0.0;
  double fde_m = 0.0;
  double baseline_ade_m = 0.0;
  double baseline_fde_m = 0.0;
  int n_windows = 0;
};

struct MetricsReport {
  int k = 1;
  std::vector<SceneMetrics> per_scene;
  SceneMetrics overall;
  double wall_seconds = 0.0;
};

struct EvalResult {
  MetricsReport report;
  std::vector<WindowEval> windows;
};

/// Best-of-K evaluation over the bundle's test windows, in meters.
/// Deterministic given the seed: window i draws from an independent stream
/// seeded by (seed, i), and sample 0 always uses eps = 0.
EvalResult evaluate(const SgsgModel<float>& model, const DataBundle& bundle, int K,
                    std::uint64_t seed);

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

/// Per-window sample dump consumed by the plot subcommand.
void write_predictions_csv(const std::filesystem::path& path, const SgsgModel<float>& model,
                           const DataBundle& bundle, int K, std::uint64_t seed);

/// Message-count accounting for the star-vs-complete structure claim. For a
/// frame with N pedestrians, predicting one POI takes N-1 star messages,
/// against the N(N-1)/2 edges a complete-graph encoder touches; totals sum
/// both over every POI and every annotated frame.
struct CostReport {
  struct SceneCost {
    std::string scene;
    long star_messages = 0;
    long complete_messages = 0;
  };
  std::vector<SceneCost> scenes;
  std::map<std::string, Eigen::Index> parameter_counts;
};

CostReport cost_report(const std::map<std::string, LoadedScene>& scenes,
                       const std::map<std::string, Eigen::Index>& parameter_counts);

/// CSV rows scene,frame,N,star_edges,complete_edges for every annotated
/// frame; star_edges counts one POI's star graph, complete_edges the scene's
/// complete graph.
void write_graph_stats_csv(std::ostream& out, const std::map<std::string, LoadedScene>& scenes);

}  // namespace sgsg
