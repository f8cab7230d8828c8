#include "sgsg/metrics.hpp"

#include <cmath>

namespace sgsg {

double ade(std::span<const Eigen::Vector2d> pred, std::span<const Eigen::Vector2d> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw ShapeError("ade: trajectory length mismatch");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += (pred[t] - gt[t]).norm();
  return total / static_cast<double>(pred.size());
}

double fde(std::span<const Eigen::Vector2d> pred, std::span<const Eigen::Vector2d> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw ShapeError("fde: trajectory length mismatch");
  }
  return (pred.back() - gt.back()).norm();
}

BestOfK best_of_k(std::span<const std::vector<Eigen::Vector2d>> preds,
                  std::span<const Eigen::Vector2d> gt) {
  if (preds.empty()) throw ShapeError("best_of_k: empty prediction set");
  BestOfK best;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double a = ade(preds[k], gt);
    const double f = fde(preds[k], gt);
    if (k == 0 || a < best.min_ade) {
      best.min_ade = a;
      best.ade_k = static_cast<int>(k);
    }
    if (k == 0 || f < best.min_fde) {
      best.min_fde = f;
      best.fde_k = static_cast<int>(k);
    }
  }
  return best;
}

std::vector<Eigen::Vector2d> constant_velocity_baseline(std::span<const Eigen::Vector2d> obs,
                                                        int steps) {
  if (obs.empty()) throw ShapeError("constant_velocity_baseline: empty observation");
  const Eigen::Vector2d v =
      obs.size() >= 2 ? Eigen::Vector2d(obs.back() - obs[obs.size() - 2]) : Eigen::Vector2d(0, 0);
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(steps));
  Eigen::Vector2d p = obs.back();
  for (int t = 0; t < steps; ++t) {
    p += v;
    out.push_back(p);
  }
  return out;
}

}  // namespace sgsg
