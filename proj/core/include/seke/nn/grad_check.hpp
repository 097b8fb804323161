// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

#include "seke/nn/param_store.hpp"

namespace seke::nn {

/// Scalar objective over a ParamStore. When `accumulate_grads` is true the
/// function must also add d(loss)/d(param) into each trainable Param::grad.
using ScalarObjective = std::function<double(ParamStore& store, bool accumulate_grads)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients against the five-point central difference
/// (8 (f(p+e) - f(p-e)) - (f(p+2e) - f(p-2e))) / (12 e) for every trainable scalar,
/// at e = eps, then 100 eps and eps / 10 unless already within 1e-8, keeping
/// the closest estimate.
/// Relative error is |a - n| / max(|a|, |n|, 1e-12).
///
/// `f` must be deterministic: disable dropout and gate noise.
GradCheckResult grad_check(const ScalarObjective& f, ParamStore& store, double eps = 1e-5);

}  // namespace seke::nn
