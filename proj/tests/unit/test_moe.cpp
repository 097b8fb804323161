// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "moe_oracle.hpp"
#include "seke/errors.hpp"
#include "seke/moe.hpp"
#include "test_util.hpp"

namespace seke::moe {
namespace {

using nn::kMaskedLogit;
using nn::ParamStore;
using nn::RngStream;
using nn::Tensor;
using testing::random_tensor;

MoEConfig small_config(std::size_t n, std::size_t k, std::size_t d = 4) {
  MoEConfig cfg;
  cfg.n_experts = n;
  cfg.top_k = k;
  cfg.d_model = d;
  cfg.d_hidden = d;
  cfg.dropout_p = 0.0;
  cfg.zero_init_router = false;
  return cfg;
}

std::vector<testing::DenseExpert> dense_experts(const MoEParams& p) {
  std::vector<testing::DenseExpert> out;
  for (const auto& e : p.experts) out.push_back({e.w1->value, e.w2->value, e.w3->value});
  return out;
}

TEST(KeepTopK, Examples) {
  Tensor v = keep_top_k(Tensor::matrix(1, 3, {0.1, 0.9, 0.5}), 2);
  EXPECT_EQ(v, Tensor::matrix(1, 3, {kMaskedLogit, 0.9, 0.5}));
  Tensor all = Tensor::matrix(2, 3, {3, 1, 2, -1, 0, 5});
  EXPECT_EQ(keep_top_k(all, 3), all);
  EXPECT_EQ(keep_top_k(Tensor::matrix(1, 3, {1, 1, 0}), 1),
            Tensor::matrix(1, 3, {1, kMaskedLogit, kMaskedLogit}));
}

TEST(KeepTopK, OutOfRangeIsConfigError) {
  EXPECT_THROW(keep_top_k(Tensor::matrix(1, 3, {0, 0, 0}), 0), ConfigError);
  EXPECT_THROW(keep_top_k(Tensor::matrix(1, 3, {0, 0, 0}), 4), ConfigError);
}

TEST(MoEConfig, Validation) {
  EXPECT_NO_THROW(small_config(4, 2).validate());
  EXPECT_THROW(small_config(4, 5).validate(), ConfigError);
  EXPECT_THROW(small_config(4, 0).validate(), ConfigError);
  EXPECT_THROW(small_config(0, 0).validate(), ConfigError);
  MoEConfig zero_width = small_config(2, 1);
  zero_width.d_hidden = 0;
  EXPECT_THROW(zero_width.validate(), ConfigError);
}

TEST(GateLogits, ZeroGateWithoutNoiseIsZero) {
  ParamStore store;
  RngStream rng(1);
  MoEParams p = MoEParams::create(store, "moe", small_config(3, 1), rng);
  p.router.w_gate->value.fill(0.0);
  nn::Graph g(false);
  Var h = gate_logits(g, g.constant(random_tensor({5, 4}, rng)), p.router, rng, true,
                      /*noise_enabled=*/false);
  for (double v : g.value(h).data()) EXPECT_EQ(v, 0.0);
}

TEST(MoEParamsTest, ZeroRouterInitKeepsExpertDraws) {
  MoEConfig zero = small_config(3, 2);
  zero.zero_init_router = true;
  ParamStore a, b;
  RngStream ra(4), rb(4);
  MoEParams pa = MoEParams::create(a, "moe", zero, ra);
  MoEParams pb = MoEParams::create(b, "moe", small_config(3, 2), rb);
  for (double v : pa.router.w_gate->value.data()) EXPECT_EQ(v, 0.0);
  for (double v : pa.router.w_noise->value.data()) EXPECT_EQ(v, 0.0);
  EXPECT_NE(pb.router.w_gate->value, pa.router.w_gate->value);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(pa.experts[e].w1->value, pb.experts[e].w1->value);
    EXPECT_EQ(pa.experts[e].w3->value, pb.experts[e].w3->value);
  }
}

TEST(GateLogits, InferenceIsExactlyClean) {
  ParamStore store;
  RngStream rng(2);
  MoEParams p = MoEParams::create(store, "moe", small_config(3, 1), rng);
  const Tensor x = random_tensor({5, 4}, rng);
  nn::Graph g(false);
  Var h = gate_logits(g, g.constant(x), p.router, rng, false);
  EXPECT_EQ(g.value(h), nn::matmul(x, p.router.w_gate->value));
}

TEST(GateLogits, VanishingNoiseScale) {
  ParamStore store;
  RngStream rng(3);
  MoEParams p = MoEParams::create(store, "moe", small_config(3, 1), rng);
  p.router.w_noise->value.fill(-50.0);
  Tensor x({6, 4}, 1.0);
  nn::Graph g(false);
  Var h = gate_logits(g, g.constant(x), p.router, rng, true);
  EXPECT_LT(nn::max_abs_diff(g.value(h), nn::matmul(x, p.router.w_gate->value)), 1e-60);
}

TEST(GateLogits, NoiseStdMatchesSoftplusScale) {
  ParamStore store;
  RngStream init(4);
  const std::size_t n = 4;
  MoEParams p = MoEParams::create(store, "moe", small_config(n, 2), init);
  p.router.w_noise->value = Tensor::matrix(4, 4, {0.5, -1.0, 0.2, 1.5,  //
                                                  0.0, 0.3, -0.4, 0.1,   //
                                                  0.1, 0.2, 0.3, 0.4,    //
                                                  -0.3, 0.0, 0.6, -0.2});
  const std::size_t tokens = 100000;
  const Tensor row = Tensor::matrix(1, 4, {0.7, -0.2, 0.4, 1.1});
  Tensor x({tokens, 4});
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t c = 0; c < 4; ++c) x(t, c) = row(0, c);
  }
  RngStream noise(2026, "gate-noise");
  nn::Graph g(false);
  Var h = gate_logits(g, g.constant(x), p.router, noise, true);
  const Tensor clean = nn::matmul(x, p.router.w_gate->value);
  const Tensor scale = nn::matmul(row, p.router.w_noise->value);
  for (std::size_t e = 0; e < n; ++e) {
    double mean = 0.0;
    for (std::size_t t = 0; t < tokens; ++t) mean += g.value(h)(t, e) - clean(t, e);
    mean /= static_cast<double>(tokens);
    double ss = 0.0;
    for (std::size_t t = 0; t < tokens; ++t) {
      const double d = g.value(h)(t, e) - clean(t, e) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(tokens - 1));
    const double expected = nn::softplus(scale(0, e));
    EXPECT_NEAR(sd / expected, 1.0, 0.05) << "expert " << e;
  }
}

// Router with d_model = 1 and x = [1] so the gate logits equal the weights.
GateResult gate_on_logits(const std::vector<double>& logits, std::size_t k, ParamStore& store) {
  const std::size_t n = logits.size();
  MoEConfig cfg = small_config(n, k, 1);
  RngStream rng(0);
  MoEParams p = MoEParams::create(store, "moe", cfg, rng);
  p.router.w_gate->value = Tensor({1, n}, logits);
  nn::Graph g(false);
  return gate(g, g.constant(Tensor({1, 1}, 1.0)), p.router, cfg, rng, false);
}

TEST(Gate, SingleSurvivor) {
  ParamStore store;
  GateResult r = gate_on_logits({1.0, 3.0}, 1, store);
  ASSERT_EQ(r.decisions.size(), 1u);
  EXPECT_EQ(r.decisions[0].indices, std::vector<std::size_t>({1}));
  EXPECT_DOUBLE_EQ(r.decisions[0].weights[0], 1.0);
}

TEST(Gate, ClosedFormPair) {
  ParamStore store;
  GateResult r = gate_on_logits({0.0, std::log(2.0), -5.0}, 2, store);
  const GateDecision& d = r.decisions[0];
  ASSERT_EQ(d.indices.size(), 2u);
  EXPECT_EQ(d.indices[0], 1u);
  EXPECT_EQ(d.indices[1], 0u);
  EXPECT_NEAR(d.weights[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.weights[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(d.logits_raw.size(), 3u);
  EXPECT_EQ(d.top_expert(), 1u);
}

TEST(Gate, SymmetricWeights) {
  ParamStore store;
  GateResult r = gate_on_logits({0.5, 0.5, 0.5, 0.5}, 4, store);
  for (double w : r.decisions[0].weights) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_EQ(r.decisions[0].top_expert(), 0u);
}

TEST(ExpertForward, ZeroWeightsGiveZero) {
  ParamStore store;
  RngStream rng(5);
  MoEParams p = MoEParams::create(store, "moe", small_config(1, 1), rng);
  for (auto* w : {p.experts[0].w1, p.experts[0].w2, p.experts[0].w3}) w->value.fill(0.0);
  nn::Graph g(false);
  Var y = expert_forward(g, g.constant(random_tensor({3, 4}, rng)), p.experts[0], 0.0, rng, false);
  for (double v : g.value(y).data()) EXPECT_EQ(v, 0.0);
}

TEST(ExpertForward, IdentityOnNonnegativeInput) {
  ParamStore store;
  RngStream rng(6);
  MoEParams p = MoEParams::create(store, "moe", small_config(1, 1), rng);
  const Tensor eye = Tensor::matrix(4, 4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  for (auto* w : {p.experts[0].w1, p.experts[0].w2, p.experts[0].w3}) w->value = eye;
  const Tensor x = random_tensor({3, 4}, rng, 0.0, 2.0);
  nn::Graph g(false);
  Var y = expert_forward(g, g.constant(x), p.experts[0], 0.5, rng, false);
  EXPECT_EQ(g.value(y), x);
}

TEST(ExpertForward, MatchesStraightLineReference) {
  ParamStore store;
  RngStream rng(7);
  MoEConfig cfg = small_config(1, 1, 5);
  cfg.d_hidden = 7;
  MoEParams p = MoEParams::create(store, "moe", cfg, rng);
  const Tensor x = random_tensor({6, 5}, rng);
  nn::Graph g(false);
  Var y = expert_forward(g, g.constant(x), p.experts[0], 0.0, rng, false);
  EXPECT_LE(nn::max_abs_diff(g.value(y), testing::reference_expert(x, dense_experts(p)[0])), 1e-6);
}

TEST(MoEForward, TopOneEqualsSelectedExpert) {
  ParamStore store;
  RngStream rng(8);
  MoEConfig cfg = small_config(3, 1);
  MoEParams p = MoEParams::create(store, "moe", cfg, rng);
  const Tensor x = random_tensor({6, 4}, rng);
  nn::Graph g(false);
  MoEOutput out = moe_forward(g, g.constant(x), p, cfg, rng, false);
  const auto experts = dense_experts(p);
  for (const auto& d : out.decisions) {
    Tensor xt({1, 4});
    for (std::size_t c = 0; c < 4; ++c) xt(0, c) = x(d.token_index, c);
    const Tensor expect = testing::reference_expert(xt, experts[d.indices[0]]);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(g.value(out.y)(d.token_index, c), expect(0, c), 1e-12);
    }
  }
}

TEST(MoEForward, IdenticalExpertsAreConvexInvariant) {
  ParamStore store;
  RngStream rng(9);
  MoEConfig cfg = small_config(4, 4);
  MoEParams p = MoEParams::create(store, "moe", cfg, rng);
  for (std::size_t e = 1; e < 4; ++e) {
    p.experts[e].w1->value = p.experts[0].w1->value;
    p.experts[e].w2->value = p.experts[0].w2->value;
    p.experts[e].w3->value = p.experts[0].w3->value;
  }
  const Tensor x = random_tensor({5, 4}, rng);
  nn::Graph g(false);
  MoEOutput out = moe_forward(g, g.constant(x), p, cfg, rng, false);
  EXPECT_LE(nn::max_abs_diff(g.value(out.y), testing::reference_expert(x, dense_experts(p)[0])),
            1e-12);
}

TEST(MoEForward, SparseDispatchMatchesDenseCombine) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ParamStore store;
    RngStream rng(seed, "dense-combine");
    MoEConfig cfg = small_config(4, 2);
    MoEParams p = MoEParams::create(store, "moe", cfg, rng);
    const Tensor x = random_tensor({5, 4}, rng);
    nn::Graph g(false);
    MoEOutput out = moe_forward(g, g.constant(x), p, cfg, rng, false);
    const Tensor ref =
        testing::reference_moe(x, p.router.w_gate->value, dense_experts(p), cfg.top_k);
    EXPECT_LE(nn::max_abs_diff(g.value(out.y), ref), 1e-6) << "seed " << seed;
    EXPECT_LE(out.max_experts_per_token, cfg.top_k);
  }
}

TEST(MoEForward, GateInvariants) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ParamStore store;
    RngStream rng(seed, "gate-invariants");
    const std::size_t n = 2 + rng.below(6);
    const std::size_t k = 1 + rng.below(n);
    MoEConfig cfg = small_config(n, k);
    MoEParams p = MoEParams::create(store, "moe", cfg, rng);
    nn::Graph g(false);
    GateResult r = gate(g, g.constant(random_tensor({7, 4}, rng)), p.router, cfg, rng, true);
    const Tensor& gates = g.value(r.gates);
    for (const auto& d : r.decisions) {
      double s = 0.0;
      for (double w : d.weights) {
        EXPECT_GE(w, 0.0);
        s += w;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
      std::size_t zeros = 0;
      for (double v : gates.row(d.token_index)) zeros += v == 0.0;
      EXPECT_EQ(zeros, n - k);
      EXPECT_EQ(d.indices, top_k_indices(d.logits_raw, k));
    }
  }
}

TEST(MoEForward, ExpertPermutationEquivariance) {
  ParamStore store;
  RngStream rng(10);
  MoEConfig cfg = small_config(4, 2);
  MoEParams p = MoEParams::create(store, "moe", cfg, rng);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};  // new slot j holds old expert perm[j]
  ParamStore permuted_store;
  RngStream rng2(11);
  MoEParams q = MoEParams::create(permuted_store, "moe", cfg, rng2);
  for (std::size_t j = 0; j < 4; ++j) {
    q.experts[j].w1->value = p.experts[perm[j]].w1->value;
    q.experts[j].w2->value = p.experts[perm[j]].w2->value;
    q.experts[j].w3->value = p.experts[perm[j]].w3->value;
    for (std::size_t r = 0; r < 4; ++r) {
      q.router.w_gate->value(r, j) = p.router.w_gate->value(r, perm[j]);
      q.router.w_noise->value(r, j) = p.router.w_noise->value(r, perm[j]);
    }
  }
  const Tensor x = random_tensor({9, 4}, rng);
  nn::Graph g(false);
  MoEOutput a = moe_forward(g, g.constant(x), p, cfg, rng, false);
  MoEOutput b = moe_forward(g, g.constant(x), q, cfg, rng, false);
  EXPECT_LE(nn::max_abs_diff(g.value(a.y), g.value(b.y)), 1e-12);
  for (std::size_t t = 0; t < 9; ++t) {
    ASSERT_EQ(a.decisions[t].indices.size(), b.decisions[t].indices.size());
    for (std::size_t i = 0; i < a.decisions[t].indices.size(); ++i) {
      EXPECT_EQ(a.decisions[t].indices[i], perm[b.decisions[t].indices[i]]);
    }
  }
}

TEST(MoEForward, InferenceIsDeterministic) {
  ParamStore store;
  RngStream init(12);
  MoEConfig cfg = small_config(4, 2);
  cfg.dropout_p = 0.3;
  MoEParams p = MoEParams::create(store, "moe", cfg, init);
  const Tensor x = random_tensor({6, 4}, init);
  RngStream r1(1), r2(99);
  nn::Graph g(false);
  MoEOutput a = moe_forward(g, g.constant(x), p, cfg, r1, false);
  MoEOutput b = moe_forward(g, g.constant(x), p, cfg, r2, false);
  EXPECT_EQ(g.value(a.y), g.value(b.y));
  for (std::size_t t = 0; t < 6; ++t) {
    EXPECT_EQ(a.decisions[t].indices, b.decisions[t].indices);
    EXPECT_EQ(a.decisions[t].weights, b.decisions[t].weights);
  }
}

TEST(MoEForward, GradientCheck) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ParamStore store;
    RngStream rng(seed, "moe-grad");
    MoEConfig cfg = small_config(4, 2);
    cfg.noise_enabled_training = false;
    MoEParams::create(store, "moe", cfg, rng);
    store.add("x", random_tensor({5, 4}, rng));
    auto objective = testing::projected_objective(
        [cfg](nn::Graph& g, ParamStore& s) {
          MoEParams p = MoEParams::bind(s, "moe", cfg);
          RngStream unused(0);
          return moe_forward(g, g.param(s.at("x")), p, cfg, unused, false).y;
        },
        seed);
    const auto r = nn::grad_check(objective, store);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  }
}

}  // namespace
}  // namespace seke::moe
