#include <cmath>
#include <random>

#include "doctest.h"
#include "sgsg/dataset.hpp"
#include "sgsg/metrics.hpp"

using namespace sgsg;

namespace {

std::vector<Eigen::Vector2d> random_traj(int len, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  std::vector<Eigen::Vector2d> out;
  for (int i = 0; i < len; ++i) out.emplace_back(dist(rng), dist(rng));
  return out;
}

// Independent brute-force oracle: naive loops, no reuse of the library path.
double oracle_ade(const std::vector<Eigen::Vector2d>& pred,
                  const std::vector<Eigen::Vector2d>& gt) {
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double dx = pred[t].x() - gt[t].x();
    const double dy = pred[t].y() - gt[t].y();
    total += std::sqrt(dx * dx + dy * dy);
  }
  return total / static_cast<double>(pred.size());
}

double oracle_fde(const std::vector<Eigen::Vector2d>& pred,
                  const std::vector<Eigen::Vector2d>& gt) {
  const double dx = pred.back().x() - gt.back().x();
  const double dy = pred.back().y() - gt.back().y();
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

TEST_CASE("ade/fde basic fixtures") {
  std::mt19937_64 rng(1);
  const auto gt = random_traj(12, rng);
  CHECK(ade(gt, gt) == 0.0);
  CHECK(fde(gt, gt) == 0.0);

  // constant (0.3, 0.4) offset is a 3-4-5 triangle: both metrics 0.5
  auto pred = gt;
  for (auto& p : pred) p += Eigen::Vector2d(0.3, 0.4);
  CHECK(ade(pred, gt) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fde(pred, gt) == doctest::Approx(0.5).epsilon(1e-12));

  // error only at the final step
  pred = gt;
  pred.back() += Eigen::Vector2d(1.2, 0.0);
  CHECK(ade(pred, gt) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fde(pred, gt) == doctest::Approx(1.2).epsilon(1e-12));

  auto short_pred = gt;
  short_pred.pop_back();
  CHECK_THROWS_AS(ade(short_pred, gt), ShapeError);
  CHECK_THROWS_AS(fde(short_pred, gt), ShapeError);
}

TEST_CASE("ade/fde agree with the brute-force oracle on 1000 random pairs") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto pred = random_traj(12, rng);
    const auto gt = random_traj(12, rng);
    CHECK(std::abs(ade(pred, gt) - oracle_ade(pred, gt)) < 1e-9);
    CHECK(std::abs(fde(pred, gt) - oracle_fde(pred, gt)) < 1e-9);
  }
}

TEST_CASE("best_of_k: reduction, ties, monotone prefixes") {
  std::mt19937_64 rng(7);
  const auto gt = random_traj(12, rng);
  std::vector<std::vector<Eigen::Vector2d>> preds;
  for (int k = 0; k < 20; ++k) preds.push_back(random_traj(12, rng));

  {
    const std::vector<std::vector<Eigen::Vector2d>> single = {preds[0]};
    const auto b = best_of_k(single, gt);
    CHECK(b.min_ade == ade(preds[0], gt));
    CHECK(b.min_fde == fde(preds[0], gt));
  }
  {
    auto with_perfect = preds;
    with_perfect[7] = gt;
    const auto b = best_of_k(with_perfect, gt);
    CHECK(b.min_ade == 0.0);
    CHECK(b.min_fde == 0.0);
    CHECK(b.ade_k == 7);
  }
  {
    // duplicate best: ties break to the lowest sample index
    auto tied = preds;
    tied[3] = tied[11] = gt;
    CHECK(best_of_k(tied, gt).ade_k == 3);
  }
  {
    double prev_ade = std::numeric_limits<double>::max();
    double prev_fde = prev_ade;
    for (std::size_t K = 1; K <= preds.size(); ++K) {
      const std::vector<std::vector<Eigen::Vector2d>> prefix(preds.begin(),
                                                             preds.begin() + static_cast<long>(K));
      const auto b = best_of_k(prefix, gt);
      CHECK(b.min_ade <= prev_ade);
      CHECK(b.min_fde <= prev_fde);
      prev_ade = b.min_ade;
      prev_fde = b.min_fde;
    }
  }
  CHECK_THROWS_AS(best_of_k(std::vector<std::vector<Eigen::Vector2d>>{}, gt), ShapeError);
}

TEST_CASE("constant velocity baseline") {
  {
    std::vector<Eigen::Vector2d> obs;
    for (int i = -7; i <= 0; ++i) obs.emplace_back(i, 0.0);  // ends (0,0), velocity (1,0)
    const auto pred = constant_velocity_baseline(obs, 12);
    REQUIRE(pred.size() == 12);
    for (int t = 0; t < 12; ++t) {
      CHECK(pred[static_cast<std::size_t>(t)].x() == doctest::Approx(t + 1.0));
      CHECK(pred[static_cast<std::size_t>(t)].y() == 0.0);
    }
  }
  {
    std::vector<Eigen::Vector2d> obs(8, Eigen::Vector2d(2.5, -1.0));
    for (const auto& p : constant_velocity_baseline(obs, 12)) {
      CHECK(p == Eigen::Vector2d(2.5, -1.0));
    }
  }
  {
    // rotating the observation rotates the baseline prediction (equivariance)
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::vector<Eigen::Vector2d> obs;
    for (int i = 0; i < 8; ++i) obs.emplace_back(dist(rng), dist(rng));
    std::vector<Eigen::Vector2d> rotated;
    for (const auto& p : obs) rotated.push_back(rotate90(p));
    const auto pred = constant_velocity_baseline(obs, 12);
    const auto pred_rot = constant_velocity_baseline(rotated, 12);
    for (int t = 0; t < 12; ++t) {
      CHECK((pred_rot[static_cast<std::size_t>(t)] -
             rotate90(pred[static_cast<std::size_t>(t)])).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
