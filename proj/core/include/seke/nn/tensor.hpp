// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace seke::nn {

using Shape = std::vector<std::size_t>;

/// Logit value used by top-k masking. Only softmax accepts it as input.
inline constexpr double kMaskedLogit = -std::numeric_limits<double>::infinity();

std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles tagged with its shape.
///
/// Rank-1 tensors are used for biases and per-row weights, rank-2 for
/// everything else. Scalars are stored as shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Leading extent of a rank-2 tensor (1 for rank-1).
  std::size_t rows() const;
  /// Trailing extent.
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  void fill(double value);
  Tensor reshaped(Shape shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws DimensionError unless every element is finite.
void require_finite(const Tensor& t, const char* what);

/// Largest absolute elementwise difference. Shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace seke::nn
