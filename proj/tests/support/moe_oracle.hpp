// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Straight-line MoE reference: evaluates every expert on every token and
// combines with the masked softmax weights. Shares no code with the sparse
// dispatch path beyond plain matmul.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "seke/nn/ops.hpp"
#include "seke/nn/tensor.hpp"

namespace seke::testing {

struct DenseExpert {
  nn::Tensor w1, w2, w3;
};

inline nn::Tensor reference_expert(const nn::Tensor& x, const DenseExpert& e) {
  nn::Tensor h = nn::matmul(x, e.w1);
  for (double& v : h.data()) v = std::max(v, 0.0);
  return nn::matmul(nn::matmul(h, e.w2), e.w3);
}

/// Gate weights [T, n]: softmax over the k largest logits of each row (lower
/// index wins ties), zero elsewhere.
inline nn::Tensor reference_gates(const nn::Tensor& logits, std::size_t k) {
  const std::size_t rows = logits.rows();
  const std::size_t n = logits.cols();
  nn::Tensor gates({rows, n});
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Selection by repeated argmax with strict comparison keeps the lowest index on ties.
    std::vector<bool> chosen(n, false);
    for (std::size_t pick = 0; pick < k; ++pick) {
      std::size_t best = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (best == n || logits(r, i) > logits(r, best)) best = i;
      }
      chosen[best] = true;
    }
    double mx = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) mx = std::max(mx, logits(r, i));
    }
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) z += std::exp(logits(r, i) - mx);
    }
    for (std::size_t i = 0; i < n; ++i) {
      gates(r, i) = chosen[i] ? std::exp(logits(r, i) - mx) / z : 0.0;
    }
  }
  return gates;
}

inline nn::Tensor reference_moe(const nn::Tensor& x, const nn::Tensor& w_gate,
                                const std::vector<DenseExpert>& experts, std::size_t k) {
  const nn::Tensor gates = reference_gates(nn::matmul(x, w_gate), k);
  nn::Tensor y({x.rows(), x.cols()});
  for (std::size_t e = 0; e < experts.size(); ++e) {
    const nn::Tensor out = reference_expert(x, experts[e]);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += gates(r, e) * out(r, c);
    }
  }
  return y;
}

}  // namespace seke::testing
