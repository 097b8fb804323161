// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "seke/nn/rng.hpp"
#include "seke/nn/tensor.hpp"

namespace seke::nn {

struct Param {
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

/// Named parameters with their gradients.
///
/// Entries live in a node-based map, so `Param*` handles stay valid for the
/// store's lifetime regardless of later insertions.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Registers a new parameter. Throws ConfigError on a duplicate name.
  Param& add(const std::string& name, Tensor value, bool trainable = true);

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.contains(name); }
  std::size_t size() const { return entries_.size(); }
  std::size_t num_values() const;

  void zero_grad();
  void set_trainable_if(const std::function<bool(std::string_view)>& pred, bool trainable);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Param, std::less<>> entries_;
};

/// Glorot/Xavier uniform: U(+-sqrt(6 / (fan_in + fan_out))).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng);
Tensor normal_tensor(Shape shape, double stddev, RngStream& rng);

}  // namespace seke::nn
