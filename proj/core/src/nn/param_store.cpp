// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/nn/param_store.hpp"

#include <cmath>

#include "seke/errors.hpp"

namespace seke::nn {

Param& ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (entries_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  Tensor grad(value.shape());
  auto [it, _] = entries_.emplace(name, Param{std::move(value), std::move(grad), trainable});
  return it->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, p] : entries_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : entries_) p.grad.fill(0.0);
}

void ParamStore::set_trainable_if(const std::function<bool(std::string_view)>& pred,
                                  bool trainable) {
  for (auto& [name, p] : entries_) {
    if (pred(name)) p.trainable = trainable;
  }
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor normal_tensor(Shape shape, double stddev, RngStream& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = stddev * rng.normal();
  return t;
}

}  // namespace seke::nn
