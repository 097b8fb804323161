// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace seke::nn {

GradCheckResult grad_check(const ScalarObjective& f, ParamStore& store, double eps) {
  store.zero_grad();
  f(store, true);
  std::map<std::string, Tensor> analytic;
  for (auto& [name, p] : store) {
    if (p.trainable) analytic.emplace(name, p.grad);
  }
  store.zero_grad();

  GradCheckResult result;
  for (auto& [name, p] : store) {
    if (!p.trainable) continue;
    const Tensor& a = analytic.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      auto at = [&](double offset) {
        p.value[i] = saved + offset;
        return f(store, false);
      };
      // Five-point stencil, O(h^4) truncation.
      auto slope = [&](double h) {
        return (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      };
      auto rel_error = [&](double numeric) {
        const double denom = std::max({std::abs(a[i]), std::abs(numeric), 1e-12});
        return std::abs(a[i] - numeric) / denom;
      };
      // Three step sizes. A wrong analytic gradient disagrees at all of them.
      // The default step is the usual compromise. A larger one escapes
      // rounding on tiny gradients, where the stencil's error is dominated by
      // machine epsilon / h. A smaller one avoids straddling a ReLU or top-k kink.
      double numeric = slope(eps);
      double rel = rel_error(numeric);
      for (double h : {eps * 100.0, eps / 10.0}) {
        if (rel <= 1e-8) break;
        const double alt = slope(h);
        if (rel_error(alt) < rel) {
          numeric = alt;
          rel = rel_error(alt);
        }
      }
      p.value[i] = saved;
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = name;
        result.worst_index = i;
        result.analytic = a[i];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace seke::nn
