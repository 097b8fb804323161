// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "seke/nn/rng.hpp"
#include "seke/nn/tensor.hpp"

namespace seke::nn {

enum class Activation { kRelu, kSoftplus, kSigmoid, kTanh };

Activation parse_activation(std::string_view name);

// Forward-only tensor functions. The differentiable versions live on Graph
// and call into these for their forward values.

/// a[m,k] * b[k,n]. Rank-1 `a` is treated as a single row.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// y = x*W (+ b). Throws DimensionError naming both shapes on mismatch.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor* b = nullptr);

double activate(Activation kind, double x);
/// Derivative expressed in terms of the input `x` and output `y`.
double activate_grad(Activation kind, double x, double y);
Tensor activation(Activation kind, const Tensor& x);

/// ln(1 + e^x); returns x itself above 30.
double softplus(double x);
double sigmoid(double x);

/// Row-wise softmax over the last axis. kMaskedLogit entries map to exactly
/// zero. A row consisting only of masked entries is an error.
Tensor softmax(const Tensor& x);

/// Inverted-dropout keep mask: each entry is 0 with probability p, else 1/(1-p).
Tensor dropout_mask(const Shape& shape, double p, RngStream& rng);
Tensor dropout(const Tensor& x, double p, RngStream& rng, bool training);

/// Mean over unmasked rows of -log softmax(logits)[target].
/// Targets must be valid class ids for every unmasked row.
double cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const bool> mask);
/// d(cross_entropy)/d(logits).
Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> targets,
                          std::span<const bool> mask);

}  // namespace seke::nn
