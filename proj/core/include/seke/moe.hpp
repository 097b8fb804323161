// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seke/nn/graph.hpp"
#include "seke/nn/param_store.hpp"

namespace seke::moe {

using nn::Graph;
using nn::Var;

struct MoEConfig {
  std::size_t n_experts = 8;
  std::size_t top_k = 2;
  std::size_t d_model = 128;
  std::size_t d_hidden = 128;
  double dropout_p = 0.1;
  bool noise_enabled_training = true;
  /// Start W_gate and W_noise at zero so early routing is driven by noise
  /// alone and stays balanced. When false they are Glorot like the experts.
  bool zero_init_router = true;

  /// Throws ConfigError on a zero dimension or top_k outside [1, n_experts].
  void validate() const;
};

struct RouterParams {
  nn::Param* w_gate = nullptr;   // [d_model, n_experts]
  nn::Param* w_noise = nullptr;  // [d_model, n_experts]
};

struct ExpertParams {
  nn::Param* w1 = nullptr;  // [d_model, d_hidden]
  nn::Param* w2 = nullptr;  // [d_hidden, d_hidden]
  nn::Param* w3 = nullptr;  // [d_hidden, d_model]
};

struct MoEParams {
  RouterParams router;
  std::vector<ExpertParams> experts;

  /// Registers `<prefix>.router.{gate,noise}` and `<prefix>.expert<i>.w{1,2,3}`
  /// with Glorot initialization (router zeroed when `cfg.zero_init_router`).
  /// The random draws do not depend on that flag.
  static MoEParams create(nn::ParamStore& store, const std::string& prefix, const MoEConfig& cfg,
                          nn::RngStream& init);
  /// Binds to parameters previously registered under `prefix`.
  static MoEParams bind(nn::ParamStore& store, const std::string& prefix, const MoEConfig& cfg);
};

/// Routing outcome for one token.
struct GateDecision {
  std::size_t token_index = 0;
  std::vector<std::size_t> indices;  // selected experts, by descending logit
  std::vector<double> weights;       // softmax weights of `indices`
  std::vector<double> logits_raw;    // H(x) for every expert

  /// Selected expert carrying the largest weight (lower id on ties).
  std::size_t top_expert() const;
};

/// Indices of the k largest entries, by descending value; ties go to the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t k);

/// Keeps the k largest entries of each row and replaces the rest with kMaskedLogit.
nn::Tensor keep_top_k(const nn::Tensor& v, std::size_t k);

/// H(x) = x*W_gate + N(0,1) * softplus(x*W_noise) while training with noise
/// enabled; x*W_gate otherwise. Noise is drawn fresh per token and expert.
Var gate_logits(Graph& g, Var x, const RouterParams& router, nn::RngStream& rng, bool training,
                bool noise_enabled = true);

struct GateResult {
  Var gates;  // [T, n_experts], zero outside the top-k
  std::vector<GateDecision> decisions;
};

/// G(x) = softmax(KeepTopK(H(x), k)).
GateResult gate(Graph& g, Var x, const RouterParams& router, const MoEConfig& cfg,
                nn::RngStream& rng, bool training);

/// E(x) = Dropout(ReLU(x W1) W2) W3.
Var expert_forward(Graph& g, Var x, const ExpertParams& e, double dropout_p, nn::RngStream& rng,
                   bool training);

struct MoEOutput {
  Var y;  // [T, d_model]
  std::vector<GateDecision> decisions;
  /// Largest number of experts evaluated for any single token.
  std::size_t max_experts_per_token = 0;
};

/// y_t = sum over the top-k experts of weight * E_i(x_t). Experts only see
/// the tokens routed to them; unselected experts are never evaluated.
MoEOutput moe_forward(Graph& g, Var x, const MoEParams& params, const MoEConfig& cfg,
                      nn::RngStream& rng, bool training);

}  // namespace seke::moe
