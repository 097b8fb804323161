// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/nn/adam.hpp"

#include <cmath>

namespace seke::nn {

void adam_step(ParamStore& store, AdamState& state) {
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, p] : store) {
    if (!p.trainable) continue;
    auto m_it = state.m.find(name);
    if (m_it == state.m.end()) {
      m_it = state.m.emplace(name, Tensor(p.value.shape())).first;
      state.v.emplace(name, Tensor(p.value.shape()));
    }
    Tensor& m = m_it->second;
    Tensor& v = state.v.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
  store.zero_grad();
}

}  // namespace seke::nn
