#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "wgan/core.hpp"

namespace wgan {

using Shape = std::vector<int>;

inline long shape_numel(const Shape& s) {
  long n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// Dense row-major tensor of Scalar. Images are stored N x C x H x W.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    for (int d : shape_) WGAN_CHECK(d > 0, "tensor dims must be positive, got ", shape_str(shape_));
    data_.setZero(shape_numel(shape_));
  }
  Tensor(Shape shape, Scalar fill) : Tensor(std::move(shape)) { data_.setConstant(fill); }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, Scalar v) { return Tensor(std::move(shape), v); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor scalar(Scalar v) { return Tensor(Shape{1}, v); }

  static Tensor randn(Shape shape, Rng& rng, Scalar stddev = 1.0) {
    Tensor t(std::move(shape));
    for (long i = 0; i < t.numel(); ++i) t.data_[i] = rng.normal(0.0, stddev);
    return t;
  }
  static Tensor rand(Shape shape, Rng& rng, Scalar lo = 0.0, Scalar hi = 1.0) {
    Tensor t(std::move(shape));
    for (long i = 0; i < t.numel(); ++i) t.data_[i] = rng.uniform(lo, hi);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  long numel() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Eigen::ArrayXd& array() { return data_; }
  const Eigen::ArrayXd& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](long i) { return data_[i]; }
  Scalar operator[](long i) const { return data_[i]; }

  // 4-D convenience indexing (N,C,H,W)
  Scalar& at(int n, int c, int h, int w) { return data_[offset4(n, c, h, w)]; }
  Scalar at(int n, int c, int h, int w) const { return data_[offset4(n, c, h, w)]; }

  Scalar item() const {
    WGAN_CHECK(numel() == 1, "item() on tensor of shape ", shape_str(shape_));
    return data_[0];
  }

  Tensor reshaped(Shape shape) const {
    WGAN_CHECK(shape_numel(shape) == numel(), "reshape ", shape_str(shape_), " -> ",
               shape_str(shape), " changes element count");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const { return data_.isFinite().all(); }

  Scalar min() const { return data_.minCoeff(); }
  Scalar max() const { return data_.maxCoeff(); }
  Scalar sum() const { return data_.sum(); }
  Scalar mean() const { return numel() ? data_.mean() : 0.0; }

 private:
  long offset4(int n, int c, int h, int w) const {
    return ((static_cast<long>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Shape shape_;
  Eigen::ArrayXd data_;
};

inline bool tensors_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && (a.array() == b.array()).all();
}

inline Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
  WGAN_CHECK(a.same_shape(b), "max_abs_diff shape mismatch");
  if (a.numel() == 0) return 0.0;
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace wgan
