// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/moe.hpp"

#include <algorithm>
#include <numeric>

#include "seke/errors.hpp"

namespace seke::moe {

void MoEConfig::validate() const {
  if (n_experts == 0 || d_model == 0 || d_hidden == 0) {
    throw ConfigError("moe: n_experts, d_model and d_hidden must be positive");
  }
  if (top_k < 1 || top_k > n_experts) {
    throw ConfigError("moe: top_k must be in [1, " + std::to_string(n_experts) + "], got " +
                      std::to_string(top_k));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("moe: dropout must be in [0, 1)");
}

MoEParams MoEParams::create(nn::ParamStore& store, const std::string& prefix,
                            const MoEConfig& cfg, nn::RngStream& init) {
  cfg.validate();
  nn::Tensor gate = nn::glorot_uniform(cfg.d_model, cfg.n_experts, init);
  nn::Tensor noise = nn::glorot_uniform(cfg.d_model, cfg.n_experts, init);
  if (cfg.zero_init_router) {
    gate.fill(0.0);
    noise.fill(0.0);
  }
  store.add(prefix + ".router.gate", std::move(gate));
  store.add(prefix + ".router.noise", std::move(noise));
  for (std::size_t e = 0; e < cfg.n_experts; ++e) {
    const std::string base = prefix + ".expert" + std::to_string(e);
    store.add(base + ".w1", nn::glorot_uniform(cfg.d_model, cfg.d_hidden, init));
    store.add(base + ".w2", nn::glorot_uniform(cfg.d_hidden, cfg.d_hidden, init));
    store.add(base + ".w3", nn::glorot_uniform(cfg.d_hidden, cfg.d_model, init));
  }
  return bind(store, prefix, cfg);
}

MoEParams MoEParams::bind(nn::ParamStore& store, const std::string& prefix,
                          const MoEConfig& cfg) {
  MoEParams p;
  p.router.w_gate = &store.at(prefix + ".router.gate");
  p.router.w_noise = &store.at(prefix + ".router.noise");
  for (std::size_t e = 0; e < cfg.n_experts; ++e) {
    const std::string base = prefix + ".expert" + std::to_string(e);
    p.experts.push_back({&store.at(base + ".w1"), &store.at(base + ".w2"),
                         &store.at(base + ".w3")});
  }
  return p;
}

std::size_t GateDecision::top_expert() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (weights[i] > weights[best] ||
        (weights[i] == weights[best] && indices[i] < indices[best])) {
      best = i;
    }
  }
  return indices.at(best);
}

std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t k) {
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  order.resize(k);
  return order;
}

nn::Tensor keep_top_k(const nn::Tensor& v, std::size_t k) {
  if (k < 1 || k > v.cols()) {
    throw ConfigError("keep_top_k: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(v.cols()) + "]");
  }
  nn::Tensor out(v.shape(), nn::kMaskedLogit);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t i : top_k_indices(v.row(r), k)) out(r, i) = v(r, i);
  }
  return out;
}

Var gate_logits(Graph& g, Var x, const RouterParams& router, nn::RngStream& rng, bool training,
                bool noise_enabled) {
  Var clean = g.matmul(x, g.param(*router.w_gate));
  if (!training || !noise_enabled) return clean;
  Var scale = g.activation(nn::Activation::kSoftplus, g.matmul(x, g.param(*router.w_noise)));
  nn::Tensor rnd(g.value(scale).shape());
  for (double& v : rnd.data()) v = rng.normal();
  return g.add(clean, g.mul_constant(scale, std::move(rnd)));
}

GateResult gate(Graph& g, Var x, const RouterParams& router, const MoEConfig& cfg,
                nn::RngStream& rng, bool training) {
  cfg.validate();
  Var h = gate_logits(g, x, router, rng, training, cfg.noise_enabled_training);
  const nn::Tensor& hv = g.value(h);
  const std::size_t tokens = hv.rows();
  const std::size_t n = hv.cols();
  if (n != cfg.n_experts) {
    throw DimensionError("gate: router produces " + std::to_string(n) + " logits, config says " +
                         std::to_string(cfg.n_experts));
  }

  GateResult result;
  std::vector<bool> keep(hv.size(), false);
  result.decisions.resize(tokens);
  for (std::size_t t = 0; t < tokens; ++t) {
    GateDecision& d = result.decisions[t];
    d.token_index = t;
    d.logits_raw.assign(hv.row(t).begin(), hv.row(t).end());
    d.indices = top_k_indices(hv.row(t), cfg.top_k);
    for (std::size_t i : d.indices) keep[t * n + i] = true;
  }
  result.gates = g.softmax(g.mask_fill(h, keep));
  const nn::Tensor& gv = g.value(result.gates);
  for (auto& d : result.decisions) {
    for (std::size_t i : d.indices) d.weights.push_back(gv(d.token_index, i));
  }
  return result;
}

Var expert_forward(Graph& g, Var x, const ExpertParams& e, double dropout_p, nn::RngStream& rng,
                   bool training) {
  Var h = g.activation(nn::Activation::kRelu, g.matmul(x, g.param(*e.w1)));
  h = g.dropout(g.matmul(h, g.param(*e.w2)), dropout_p, rng, training);
  return g.matmul(h, g.param(*e.w3));
}

MoEOutput moe_forward(Graph& g, Var x, const MoEParams& params, const MoEConfig& cfg,
                      nn::RngStream& rng, bool training) {
  if (params.experts.size() != cfg.n_experts) {
    throw ConfigError("moe_forward: " + std::to_string(params.experts.size()) +
                      " experts bound, config says " + std::to_string(cfg.n_experts));
  }
  const std::size_t tokens = g.value(x).rows();
  GateResult routed = gate(g, x, params.router, cfg, rng, training);

  std::vector<std::vector<std::size_t>> assigned(cfg.n_experts);
  std::vector<std::size_t> evaluated(tokens, 0);
  for (const auto& d : routed.decisions) {
    for (std::size_t i : d.indices) assigned[i].push_back(d.token_index);
  }

  std::vector<Var> parts;
  std::vector<std::vector<std::size_t>> targets;
  for (std::size_t e = 0; e < cfg.n_experts; ++e) {
    if (assigned[e].empty()) continue;
    for (std::size_t t : assigned[e]) ++evaluated[t];
    Var xe = g.gather_rows(x, assigned[e]);
    Var out = expert_forward(g, xe, params.experts[e], cfg.dropout_p, rng, training);
    Var w = g.pick(routed.gates, assigned[e], e);
    parts.push_back(g.scale_rows(out, w));
    targets.push_back(assigned[e]);
  }

  MoEOutput result;
  result.y = g.scatter_add_rows(tokens, g.value(x).cols(), parts, targets);
  result.decisions = std::move(routed.decisions);
  result.max_experts_per_token =
      evaluated.empty() ? 0 : *std::max_element(evaluated.begin(), evaluated.end());
  return result;
}

}  // namespace seke::moe
