#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <istream>
#include <optional>
#include <string>

#include "sgsg/layers.hpp"

namespace sgsg {

/// One-hot semantic grid for a scene: channel c is 1 at cells of class c.
/// Cell (row 0, col 0) covers the world square starting at `origin`, rows
/// advance along +y and columns along +x, `meters_per_cell` wide.
struct SceneRaster {
  int channels = 0;
  int height = 0;
  int width = 0;
  double meters_per_cell = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  VecX<float> grid;  // channels*height*width, row-major

  float at(int c, int row, int col) const {
    return grid[(static_cast<Eigen::Index>(c) * height + row) * width + col];
  }
  Eigen::Index numel() const { return grid.size(); }

  /// Every spatial cell must be exactly one-hot across channels.
  void validate() const;
};

SceneRaster load_raster(const std::filesystem::path& path);
void save_raster(const std::filesystem::path& path, const SceneRaster& raster);

/// Builds a one-hot raster from a text label grid: H lines of W class digits.
SceneRaster raster_from_text(std::istream& in, const std::string& origin_name, int channels,
                             double meters_per_cell, const Eigen::Vector2d& origin);

/// All cells class 0 ("walkable"); handy default when no map is available.
SceneRaster make_uniform_raster(int channels, int height, int width, double meters_per_cell = 1.0,
                                const Eigen::Vector2d& origin = Eigen::Vector2d::Zero());

/// 90-degree counter-clockwise rotation about the world origin, consistent
/// with rotate90() on trajectory points.
SceneRaster rotate90_raster(const SceneRaster& r);

/// Scene CNN weights: two conv+pool stages, then one fully connected layer
/// down to the 32-d scene feature (pre-sigmoid logits).
template <typename Scalar>
struct SceneEncoderVars {
  Var<Scalar> conv1_w, conv1_b;
  Var<Scalar> conv2_w, conv2_b;
  Var<Scalar> fc_w, fc_b;
};

template <typename Scalar>
Var<Scalar> encode_scene(Tape<Scalar>& tape, const SceneEncoderVars<Scalar>& p,
                         const SceneRaster& raster) {
  raster.validate();
  Tensor<Scalar> input(Shape{raster.channels, raster.height, raster.width},
                       raster.grid.template cast<Scalar>());
  Var<Scalar> x = make_leaf(tape, std::move(input));
  x = avg_pool2d(relu(conv2d(x, p.conv1_w, p.conv1_b, 1, 1)));
  x = avg_pool2d(relu(conv2d(x, p.conv2_w, p.conv2_b, 1, 1)));
  return affine(x, p.fc_w, p.fc_b);
}

enum class MergeMode { gating, add, concat };

MergeMode parse_merge_mode(const std::string& s);
std::string merge_mode_name(MergeMode m);

/// Combines the scene feature s with the social feature g. Gating squashes s
/// through a sigmoid and multiplies elementwise; concat projects the joined
/// 64-d vector back to 32 so downstream shapes stay uniform.
template <typename Scalar>
Var<Scalar> merge_features(Var<Scalar> s, Var<Scalar> g, MergeMode mode,
                           std::optional<Var<Scalar>> proj_w = {},
                           std::optional<Var<Scalar>> proj_b = {}) {
  switch (mode) {
    case MergeMode::gating:
      return mul(sigmoid(s), g);
    case MergeMode::add:
      return add(s, g);
    case MergeMode::concat:
      if (!proj_w || !proj_b) throw ShapeError("concat merge needs a projection layer");
      return affine(concat(s, g), *proj_w, *proj_b);
  }
  throw ConfigError("unknown merge mode");
}

}  // namespace sgsg
