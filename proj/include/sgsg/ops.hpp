#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <utility>

#include "sgsg/tape.hpp"

// Differentiable primitives. Each returns a new tape node whose backward
// closure scatters the output gradient into the operand gradients. Operand
// and output values are read back from the tape at backward time, never
// copied into the closure.

namespace sgsg {

namespace detail {

template <typename Scalar>
void check_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  assert(&a.tape() == &b.tape() && "operands from different tapes");
  (void)a;
  (void)b;
}

template <typename Scalar>
void check_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (a.value().shape != b.value().shape) {
    throw ShapeError(std::string(op) + ": shape " + shape_str(a.value().shape) + " vs " +
                     shape_str(b.value().shape));
  }
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> make_leaf(Tape<Scalar>& tape, Tensor<Scalar> v) {
  return {&tape, tape.push_leaf(std::move(v))};
}

template <typename Scalar>
Var<Scalar> make_vec(Tape<Scalar>& tape, VecX<Scalar> v) {
  return make_leaf(tape, Tensor<Scalar>::vector(std::move(v)));
}

template <typename Scalar>
Var<Scalar> make_scalar(Tape<Scalar>& tape, Scalar v) {
  return make_leaf(tape, Tensor<Scalar>::scalar(v));
}

template <typename Scalar>
Var<Scalar> make_zeros(Tape<Scalar>& tape, int n) {
  return make_vec(tape, VecX<Scalar>(VecX<Scalar>::Zero(n)));
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  Tensor<Scalar> out(a.value().shape, a.value().data + b.value().data);
  int id = a.tape().push(std::move(out), [ia, ib](Tape<Scalar>& t, int self) {
    const VecX<Scalar>& g = t.grad(self);
    t.grad(ia) += g;
    t.grad(ib) += g;
  });
  return {&a.tape(), id};
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  Tensor<Scalar> out(a.value().shape, a.value().data - b.value().data);
  int id = a.tape().push(std::move(out), [ia, ib](Tape<Scalar>& t, int self) {
    const VecX<Scalar>& g = t.grad(self);
    t.grad(ia) += g;
    t.grad(ib) -= g;
  });
  return {&a.tape(), id};
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  Tensor<Scalar> out(a.value().shape, a.value().data.cwiseProduct(b.value().data));
  int id = a.tape().push(std::move(out), [ia, ib](Tape<Scalar>& t, int self) {
    const VecX<Scalar>& g = t.grad(self);
    t.grad(ia) += g.cwiseProduct(t.value(ib).data);
    t.grad(ib) += g.cwiseProduct(t.value(ia).data);
  });
  return {&a.tape(), id};
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar c) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data * c);
  int id = x.tape().push(std::move(out), [ix, c](Tape<Scalar>& t, int self) {
    t.grad(ix) += t.grad(self) * c;
  });
  return {&x.tape(), id};
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> x, Scalar c) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data.array() + c);
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    t.grad(ix) += t.grad(self);
  });
  return {&x.tape(), id};
}

/// y = W x with W of shape {m,n}; x may have any shape with n elements
/// (higher-rank inputs are read as their flattened row-major vector).
template <typename Scalar>
Var<Scalar> matvec(Var<Scalar> w, Var<Scalar> x) {
  detail::check_same_tape(w, x);
  if (w.value().rank() != 2) throw ShapeError("matvec: weight must be rank 2");
  const int m = w.value().dim(0), n = w.value().dim(1);
  if (x.value().numel() != n) {
    throw ShapeError("matvec: weight " + shape_str(w.value().shape) + " vs input " +
                     shape_str(x.value().shape));
  }
  const int iw = w.id(), ix = x.id();
  Eigen::Map<const RowMajorMat<Scalar>> wmap(w.value().data.data(), m, n);
  Tensor<Scalar> out(Shape{m}, wmap * x.value().data);
  int id = w.tape().push(std::move(out), [iw, ix, m, n](Tape<Scalar>& t, int self) {
    const VecX<Scalar>& g = t.grad(self);
    Eigen::Map<const RowMajorMat<Scalar>> wv(t.value(iw).data.data(), m, n);
    Eigen::Map<RowMajorMat<Scalar>> gw(t.grad(iw).data(), m, n);
    gw.noalias() += g * t.value(ix).data.transpose();
    t.grad(ix).noalias() += wv.transpose() * g;
  });
  return {&w.tape(), id};
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data.cwiseMax(Scalar(0)));
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    const auto& xv = t.value(ix).data;
    t.grad(ix).array() +=
        t.grad(self).array() * (xv.array() > Scalar(0)).template cast<Scalar>();
  });
  return {&x.tape(), id};
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  const int ix = x.id();
  VecX<Scalar> y(x.value().numel());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar v = x.value().data[i];
    y[i] = v >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-v))
                          : std::exp(v) / (Scalar(1) + std::exp(v));
  }
  Tensor<Scalar> out(x.value().shape, std::move(y));
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    const auto& yv = t.value(self).data.array();
    t.grad(ix).array() += t.grad(self).array() * yv * (Scalar(1) - yv);
  });
  return {&x.tape(), id};
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data.array().tanh().matrix());
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    const auto& yv = t.value(self).data.array();
    t.grad(ix).array() += t.grad(self).array() * (Scalar(1) - yv.square());
  });
  return {&x.tape(), id};
}

/// e^x elementwise.
template <typename Scalar>
Var<Scalar> exp(Var<Scalar> x) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data.array().exp().matrix());
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    t.grad(ix).array() += t.grad(self).array() * t.value(self).data.array();
  });
  return {&x.tape(), id};
}

/// Clamp to [lo, hi]; gradient passes through strictly inside the interval.
template <typename Scalar>
Var<Scalar> clamp(Var<Scalar> x, Scalar lo, Scalar hi) {
  const int ix = x.id();
  Tensor<Scalar> out(x.value().shape, x.value().data.cwiseMax(lo).cwiseMin(hi));
  int id = x.tape().push(std::move(out), [ix, lo, hi](Tape<Scalar>& t, int self) {
    const auto& xv = t.value(ix).data.array();
    t.grad(ix).array() +=
        t.grad(self).array() * ((xv > lo) && (xv < hi)).template cast<Scalar>();
  });
  return {&x.tape(), id};
}

/// Contiguous sub-vector [start, start+len).
template <typename Scalar>
Var<Scalar> slice(Var<Scalar> x, int start, int len) {
  if (start < 0 || len < 1 || start + len > x.value().numel()) {
    throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of range for " + shape_str(x.value().shape));
  }
  const int ix = x.id();
  Tensor<Scalar> out(Shape{len}, x.value().data.segment(start, len));
  int id = x.tape().push(std::move(out), [ix, start, len](Tape<Scalar>& t, int self) {
    t.grad(ix).segment(start, len) += t.grad(self);
  });
  return {&x.tape(), id};
}

template <typename Scalar>
Var<Scalar> concat(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_tape(a, b);
  const int na = static_cast<int>(a.value().numel());
  const int nb = static_cast<int>(b.value().numel());
  VecX<Scalar> joined(na + nb);
  joined << a.value().data, b.value().data;
  const int ia = a.id(), ib = b.id();
  Tensor<Scalar> out(Shape{na + nb}, std::move(joined));
  int id = a.tape().push(std::move(out), [ia, ib, na, nb](Tape<Scalar>& t, int self) {
    const VecX<Scalar>& g = t.grad(self);
    t.grad(ia) += g.head(na);
    t.grad(ib) += g.tail(nb);
  });
  return {&a.tape(), id};
}

/// Sum of all elements; output is a scalar node.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  const int ix = x.id();
  Tensor<Scalar> out = Tensor<Scalar>::scalar(x.value().data.sum());
  int id = x.tape().push(std::move(out), [ix](Tape<Scalar>& t, int self) {
    t.grad(ix).array() += t.grad(self)[0];
  });
  return {&x.tape(), id};
}

template <typename Scalar>
Var<Scalar> sum_squares(Var<Scalar> x) {
  return sum(mul(x, x));
}

/// Mean of equally-shaped vectors; summation in the given order.
template <typename Scalar>
Var<Scalar> average(std::span<const Var<Scalar>> xs) {
  if (xs.empty()) throw ShapeError("average of zero tensors");
  Var<Scalar> acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return scale(acc, Scalar(1) / Scalar(xs.size()));
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}
template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
  return sub(a, b);
}
template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) {
  return mul(a, b);
}
template <typename Scalar>
Var<Scalar> operator*(Scalar c, Var<Scalar> x) {
  return scale(x, c);
}

}  // namespace sgsg
