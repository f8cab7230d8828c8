#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "sgsg/dataset.hpp"
#include "sgsg/scene.hpp"

namespace sgsg {

/// Run configuration, read from a flat key=value file. Unknown keys are
/// errors.
struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 128;
  int epochs = 200;
  std::uint64_t seed = 1;
  double kld_weight = 1.0;
  MergeMode merge = MergeMode::gating;
  bool use_social = true;
  bool use_scene = true;
  bool use_vae = true;
  std::string held_out;

  int patience = 20;          // early-stop patience on validation ADE
  double val_fraction = 0.1;  // share of training windows held for validation
  int max_train_windows = 0;  // 0 = unlimited; seeded subsample otherwise
  int augment_rotations = 1;  // extra 90-degree copies of the training scenes
  bool norm_per_scene = false;
  bool teacher_forcing = false;
  bool prior_sampling = false;
  bool gcn_self_loop = false;

  int scene_channels = 3;
  int scene_size = 64;  // rasters must be channels x size x size

  std::vector<SceneSpec> scenes;

  void validate() const;
  const SceneSpec& scene(const std::string& name) const;
};

TrainConfig parse_config(const std::filesystem::path& path);
TrainConfig parse_config_text(std::istream& in, const std::string& origin,
                              const std::filesystem::path& base_dir = {});

}  // namespace sgsg
