// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sefpnet/errors.hpp"

namespace sefpnet {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

// Dense row-major double tensor, rank <= 4 in practice. Value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)),
        data_(static_cast<size_t>(shape_numel(shape_)), 0.0) {
    check_shape();
  }
  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (static_cast<int64_t>(data_.size()) != shape_numel(shape_))
      throw ShapeError("Tensor: data size " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return full({1}, v); }
  static Tensor randn(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, stddev);
    for (double& x : t.data_) x = d(rng);
    return t;
  }
  static Tensor uniform(Shape shape, std::mt19937_64& rng, double lo,
                        double hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& x : t.data_) x = d(rng);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Row-major multi-index accessors.
  double& at(int64_t i, int64_t j) { return data_[size_t(i * shape_[1] + j)]; }
  double at(int64_t i, int64_t j) const {
    return data_[size_t(i * shape_[1] + j)];
  }
  double& at(int64_t i, int64_t j, int64_t k) {
    return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
  }
  double& at(int64_t i, int64_t j, int64_t k, int64_t l) {
    return data_[size_t(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  double at(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return data_[size_t(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor reshaped(Shape s) const {
    if (shape_numel(s) != numel())
      throw ShapeError("reshape: cannot view " + shape_str(shape_) + " as " +
                       shape_str(s));
    Tensor t;
    t.shape_ = std::move(s);
    t.data_ = data_;
    return t;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void scale(double a) {
    for (double& x : data_) x *= a;
  }
  void add_(const Tensor& o) {
    if (!same_shape(o))
      throw ShapeError("add_: shape mismatch " + shape_str(shape_) + " vs " +
                       shape_str(o.shape_));
    for (int64_t i = 0; i < numel(); ++i) data_[size_t(i)] += o.data_[size_t(i)];
  }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
  double abs_max() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
  }
  double sq_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
  }
  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  void check_shape() const {
    for (int64_t d : shape_)
      if (d < 0) throw ShapeError("Tensor: negative dim in " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace sefpnet
