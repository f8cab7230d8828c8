#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "sgsg/error.hpp"

namespace sgsg {

/// Mean Euclidean distance over the prediction period, in the units of the
/// inputs (meters after denormalization).
double ade(std::span<const Eigen::Vector2d> pred, std::span<const Eigen::Vector2d> gt);

/// Euclidean distance at the final predicted step.
double fde(std::span<const Eigen::Vector2d> pred, std::span<const Eigen::Vector2d> gt);

struct BestOfK {
  double min_ade = 0.0;
  double min_fde = 0.0;
  int ade_k = 0;  // lowest sample index attaining the min
  int fde_k = 0;
};

/// minADE and minFDE minimized independently over the samples; ties broken by
/// the lowest sample index.
BestOfK best_of_k(std::span<const std::vector<Eigen::Vector2d>> preds,
                  std::span<const Eigen::Vector2d> gt);

/// Extrapolates the last observed step velocity.
std::vector<Eigen::Vector2d> constant_velocity_baseline(std::span<const Eigen::Vector2d> obs,
                                                        int steps = 12);

}  // namespace sgsg
