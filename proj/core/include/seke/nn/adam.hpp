// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "seke/nn/param_store.hpp"

namespace seke::nn {

struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::map<std::string, Tensor, std::less<>> m;
  std::map<std::string, Tensor, std::less<>> v;
};

/// One bias-corrected Adam update on the trainable entries of `store`.
/// Frozen entries are left untouched. All gradients are zeroed afterwards.
void adam_step(ParamStore& store, AdamState& state);

}  // namespace seke::nn
