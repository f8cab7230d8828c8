#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "sgsg/error.hpp"

namespace sgsg {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMajorMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<int>;

inline Eigen::Index shape_numel(const Shape& shape) {
  Eigen::Index n = 1;
  for (int d : shape) {
    if (d < 1) throw ShapeError("tensor dimensions must be >= 1");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major tensor. Rank 1 for vectors, {rows,cols} for matrices,
/// {C,H,W} for feature grids; a scalar is shape {1}.
template <typename Scalar>
struct Tensor {
  Shape shape;
  VecX<Scalar> data;

  Tensor() = default;

  explicit Tensor(Shape s) : shape(std::move(s)), data(VecX<Scalar>::Zero(shape_numel(shape))) {}

  Tensor(Shape s, VecX<Scalar> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape)) {
      throw ShapeError("tensor data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
  }

  static Tensor scalar(Scalar v) {
    Tensor t(Shape{1});
    t.data[0] = v;
    return t;
  }

  static Tensor vector(VecX<Scalar> v) {
    const int n = static_cast<int>(v.size());
    return Tensor(Shape{n}, std::move(v));
  }

  static Tensor matrix(int rows, int cols, VecX<Scalar> v) {
    return Tensor(Shape{rows, cols}, std::move(v));
  }

  Eigen::Index numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return data.size() == 1; }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  Scalar& operator[](Eigen::Index i) { return data[i]; }
  Scalar operator[](Eigen::Index i) const { return data[i]; }

  /// Rank-2 view of the flat storage.
  Eigen::Map<const RowMajorMat<Scalar>> as_matrix() const {
    if (rank() != 2) throw ShapeError("as_matrix on tensor of shape " + shape_str(shape));
    return {data.data(), shape[0], shape[1]};
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape, data.template cast<Other>());
  }
};

}  // namespace sgsg
