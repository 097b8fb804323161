// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "seke/errors.hpp"

namespace seke::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

void check_probability(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation: " + std::string(name));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  if (b.rank() != 2 || b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_to_string(a.shape()) +
                         " x " + shape_to_string(b.shape()));
  }
  const std::size_t n = b.cols();
  Tensor out({m, n});
  MutMap(out.data().data(), m, n).noalias() =
      ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  MutMap(out.data().data(), a.cols(), a.rows()) =
      ConstMap(a.data().data(), a.rows(), a.cols()).transpose();
  return out;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (w.rank() != 2 || x.cols() != w.rows()) {
    throw DimensionError("dense: input " + shape_to_string(x.shape()) +
                         " incompatible with weight " + shape_to_string(w.shape()));
  }
  if (b && (b->rank() != 1 || b->size() != w.cols())) {
    throw DimensionError("dense: bias " + shape_to_string(b->shape()) +
                         " incompatible with weight " + shape_to_string(w.shape()));
  }
  require_finite(x, "dense input");
  Tensor y = matmul(x, w);
  if (b) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += (*b)[c];
    }
  }
  if (x.rank() == 1) y = y.reshaped({w.cols()});
  return y;
}

double softplus(double x) {
  if (x > 30.0) return x;
  // log1p(exp(x)) loses nothing for very negative x and stays finite.
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kSoftplus:
      return softplus(x);
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kTanh:
      return std::tanh(x);
  }
  return x;
}

double activate_grad(Activation kind, double x, double y) {
  switch (kind) {
    case Activation::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::kSoftplus:
      return sigmoid(x);
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kTanh:
      return 1.0 - y * y;
  }
  return 1.0;
}

Tensor activation(Activation kind, const Tensor& x) {
  require_finite(x, "activation input");
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate(kind, x[i]);
  return y;
}

Tensor softmax(const Tensor& x) {
  Tensor y(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    double peak = kMaskedLogit;
    for (double v : in) {
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw DimensionError("softmax: NaN or +inf in row " + std::to_string(r));
      }
      peak = std::max(peak, v);
    }
    if (peak == kMaskedLogit) {
      throw DimensionError("softmax: degenerate row " + std::to_string(r) +
                           " (every entry masked)");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      out[c] = in[c] == kMaskedLogit ? 0.0 : std::exp(in[c] - peak);
      total += out[c];
    }
    for (double& v : out) v /= total;
  }
  return y;
}

Tensor dropout_mask(const Shape& shape, double p, RngStream& rng) {
  check_probability(p);
  Tensor mask(shape, 1.0);
  if (p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& v : mask.data()) v = rng.bernoulli(p) ? 0.0 : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& x, double p, RngStream& rng, bool training) {
  check_probability(p);
  if (!training || p == 0.0) return x;
  Tensor mask = dropout_mask(x.shape(), p, rng);
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] *= x[i];
  return mask;
}

namespace {

std::size_t check_ce_inputs(const Tensor& logits, std::span<const int> targets,
                            std::span<const bool> mask) {
  if (logits.rank() != 2 || targets.size() != logits.rows() || mask.size() != logits.rows()) {
    throw DimensionError("cross_entropy: logits " + shape_to_string(logits.shape()) +
                         " vs " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(mask.size()) + " mask entries");
  }
  std::size_t active = 0;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (!mask[r]) continue;
    ++active;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= logits.cols()) {
      throw DataError("cross_entropy: target " + std::to_string(targets[r]) +
                      " out of range at position " + std::to_string(r));
    }
  }
  if (active == 0) throw DataError("cross_entropy: every position is masked");
  return active;
}

}  // namespace

double cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const bool> mask) {
  const std::size_t active = check_ce_inputs(logits, targets, mask);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - peak);
    total += peak + std::log(sum) - row[static_cast<std::size_t>(targets[r])];
  }
  return total / static_cast<double>(active);
}

Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> targets,
                          std::span<const bool> mask) {
  const std::size_t active = check_ce_inputs(logits, targets, mask);
  Tensor probs = softmax(logits);
  const double inv = 1.0 / static_cast<double>(active);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = probs.row(r);
    if (!mask[r]) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    row[static_cast<std::size_t>(targets[r])] -= 1.0;
    for (double& v : row) v *= inv;
  }
  return probs;
}

}  // namespace seke::nn
