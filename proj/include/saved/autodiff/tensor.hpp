#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace saved::ad {

using Index = Eigen::Index;

/// NCHW extent.
struct Shape {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  Index numel() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  Index item() const { return c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

/// Dense NCHW tensor with an optional gradient buffer of the same shape.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0), bool requires_grad = false)
      : shape_(shape), value_(Vector::Constant(shape.numel(), fill)), requires_grad_(requires_grad) {
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw std::invalid_argument("tensor extents must be positive: " + to_string(shape));
    }
    if (requires_grad_) grad_ = Vector::Zero(shape.numel());
  }
  Tensor(Shape shape, Vector values, bool requires_grad = false) : Tensor(shape, Scalar(0), requires_grad) {
    if (values.size() != shape.numel()) {
      throw std::invalid_argument("tensor data length does not match " + to_string(shape));
    }
    value_ = std::move(values);
  }

  const Shape& shape() const { return shape_; }
  Index numel() const { return shape_.numel(); }

  Vector& value() { return value_; }
  const Vector& value() const { return value_; }
  Vector& grad() { return grad_; }
  const Vector& grad() const { return grad_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) {
    requires_grad_ = on;
    if (on && grad_.size() != value_.size()) grad_ = Vector::Zero(value_.size());
  }
  void zero_grad() {
    if (requires_grad_) grad_.setZero();
  }

  Scalar& at(Index n, Index c, Index y, Index x) { return value_[offset(n, c, y, x)]; }
  Scalar at(Index n, Index c, Index y, Index x) const { return value_[offset(n, c, y, x)]; }
  Index offset(Index n, Index c, Index y, Index x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  /// Batch item `n` viewed as a (channels, height*width) matrix.
  MatrixMap item(Index n) { return MatrixMap(value_.data() + n * shape_.item(), shape_.c, shape_.plane()); }
  ConstMatrixMap item(Index n) const {
    return ConstMatrixMap(value_.data() + n * shape_.item(), shape_.c, shape_.plane());
  }
  MatrixMap grad_item(Index n) { return MatrixMap(grad_.data() + n * shape_.item(), shape_.c, shape_.plane()); }
  ConstMatrixMap grad_item(Index n) const {
    return ConstMatrixMap(grad_.data() + n * shape_.item(), shape_.c, shape_.plane());
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, value_.template cast<Other>().eval(), requires_grad_);
  }

 private:
  Shape shape_{};
  Vector value_;
  Vector grad_;
  bool requires_grad_ = false;
};

}  // namespace saved::ad
