#pragma once

#include <cmath>
#include <map>
#include <string>

#include "sgsg/params.hpp"

namespace sgsg {

template <typename Scalar>
struct AdamConfig {
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

/// Adam with bias correction. Moments are allocated lazily per parameter and
/// updated in sorted-name order.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamConfig<Scalar> cfg = {}) : cfg_(cfg) {}

  void step(ParamStore<Scalar>& params) {
    ++t_;
    const Scalar corr1 = Scalar(1) - static_cast<Scalar>(std::pow(double(cfg_.beta1), double(t_)));
    const Scalar corr2 = Scalar(1) - static_cast<Scalar>(std::pow(double(cfg_.beta2), double(t_)));
    for (auto& [name, e] : params.entries()) {
      Moments& mo = moments_[name];
      if (mo.m.size() == 0) {
        mo.m = VecX<Scalar>::Zero(e.value.numel());
        mo.v = VecX<Scalar>::Zero(e.value.numel());
      }
      const auto& g = e.grad.data;
      mo.m = cfg_.beta1 * mo.m + (Scalar(1) - cfg_.beta1) * g;
      mo.v = cfg_.beta2 * mo.v + (Scalar(1) - cfg_.beta2) * g.cwiseProduct(g);
      e.value.data.array() -= cfg_.lr * (mo.m.array() / corr1) /
                              ((mo.v.array() / corr2).sqrt() + cfg_.eps);
    }
  }

  long step_count() const { return t_; }
  const AdamConfig<Scalar>& config() const { return cfg_; }

 private:
  struct Moments {
    VecX<Scalar> m, v;
  };

  AdamConfig<Scalar> cfg_;
  std::map<std::string, Moments> moments_;
  long t_ = 0;
};

}  // namespace sgsg
