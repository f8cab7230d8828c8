#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sgsg/ops.hpp"

namespace sgsg {

/// Named parameters with matching gradient buffers. Iteration order is the
/// sorted name order everywhere, which keeps updates deterministic.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
  };

  Tensor<Scalar>& add(const std::string& name, Tensor<Scalar> init) {
    auto [it, fresh] = entries_.try_emplace(name);
    if (!fresh) throw ConfigError("duplicate parameter name: " + name);
    it->second.grad = Tensor<Scalar>(init.shape);
    it->second.value = std::move(init);
    return it->second.value;
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor<Scalar>& value(const std::string& name) { return find(name).value; }
  const Tensor<Scalar>& value(const std::string& name) const { return find(name).value; }
  Tensor<Scalar>& grad(const std::string& name) { return find(name).grad; }
  const Tensor<Scalar>& grad(const std::string& name) const { return find(name).grad; }

  /// Puts the current value on the tape as a leaf and records the binding so
  /// collect() can route the leaf's gradient back here.
  Var<Scalar> bind(Tape<Scalar>& tape, const std::string& name) const {
    Var<Scalar> v = make_leaf(tape, find(name).value);
    tape.note_param(name, v.id());
    return v;
  }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.grad.data.setZero();
  }

  /// Accumulates tape-leaf gradients into the store, in binding order.
  /// Leaves never touched by backward contribute zero.
  void collect(const Tape<Scalar>& tape) {
    for (const auto& [name, id] : tape.param_bindings()) {
      const VecX<Scalar>& g = tape.grad(id);
      if (g.size() > 0) find(name).grad.data += g;
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }

  Eigen::Index total_params() const {
    Eigen::Index n = 0;
    for (const auto& [name, e] : entries_) n += e.value.numel();
    return n;
  }

  Eigen::Index count_prefix(const std::string& prefix) const {
    Eigen::Index n = 0;
    for (const auto& [name, e] : entries_)
      if (name.rfind(prefix, 0) == 0) n += e.value.numel();
    return n;
  }

 private:
  Entry& find(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Entry& find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

/// Uniform init in +-sqrt(1/fan_in); draws in double so float and double
/// instantiations of the same seed see the same values.
template <typename Scalar>
Tensor<Scalar> uniform_fan_in(Shape shape, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Scalar> t(std::move(shape));
  for (Eigen::Index i = 0; i < t.numel(); ++i) t.data[i] = static_cast<Scalar>(dist(rng));
  return t;
}

}  // namespace sgsg
