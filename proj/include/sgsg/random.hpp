#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sgsg/tensor.hpp"

namespace sgsg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed, e.g. per test window, so parallel and
/// serial evaluation draw identical noise.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Seeded N(0,1) stream. Box-Muller over mt19937_64 with an explicit
/// uint-to-(0,1) mapping, so draws do not depend on library internals.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = canonical();
    const double u2 = canonical();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename Scalar>
  VecX<Scalar> vec(int n) {
    VecX<Scalar> v(n);
    for (int i = 0; i < n; ++i) v[i] = static_cast<Scalar>(next());
    return v;
  }

 private:
  // Strictly inside (0,1): ((x >> 11) + 0.5) / 2^53.
  double canonical() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sgsg
