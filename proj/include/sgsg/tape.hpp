#pragma once

#include <cassert>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sgsg/tensor.hpp"

namespace sgsg {

/// Define-by-run gradient tape. Nodes are appended in evaluation order, which
/// is also a topological order, so backward() replays them exactly once in
/// reverse. One tape is built per forward pass and discarded afterwards.
template <typename Scalar>
class Tape {
 public:
  /// Receives the id of its own node; reads the accumulated output gradient
  /// (and, for ops like sigmoid, the output value) back from the tape and
  /// scatters it into the operand gradients via Tape::grad().
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int push_leaf(Tensor<Scalar> value) { return push(std::move(value), nullptr); }

  int push(Tensor<Scalar> value, BackwardFn backward) {
    if (nodes_.empty()) nodes_.reserve(1024);
    nodes_.push_back(Node{std::move(value), {}, std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Tensor<Scalar>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  /// Gradient buffer, zero-allocated on first touch so forward-only passes
  /// never pay for it.
  VecX<Scalar>& grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = VecX<Scalar>::Zero(n.value.numel());
    return n.grad;
  }
  /// May be empty if backward never reached this node.
  const VecX<Scalar>& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node
  /// reachable from the loss. Nodes with no seeded gradient are off the loss
  /// path and are skipped (their gradient is zero).
  void backward(int loss_id) {
    if (!value(loss_id).is_scalar()) throw ShapeError("backward requires a scalar loss");
    grad(loss_id)[0] += Scalar(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.back && n.grad.size() > 0) n.back(*this, id);
    }
  }

  /// Records that node `id` is a leaf bound to a named parameter, so the
  /// owning ParamStore can collect its gradient after backward().
  void note_param(std::string name, int id) { bindings_.emplace_back(std::move(name), id); }
  const std::vector<std::pair<std::string, int>>& param_bindings() const { return bindings_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    VecX<Scalar> grad;
    BackwardFn back;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, int>> bindings_;
};

/// Lightweight handle to a tape node.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape<Scalar>& tape() const {
    assert(tape_ != nullptr);
    return *tape_;
  }

  const Tensor<Scalar>& value() const { return tape().value(id_); }
  const VecX<Scalar>& grad() const { return tape().grad(id_); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

}  // namespace sgsg
