// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/recurrent.hpp"

#include <vector>

#include "seke/errors.hpp"

namespace seke::recurrent {

namespace {

constexpr const char* kDirectionNames[2] = {"fwd", "bwd"};

std::string cell_prefix(const std::string& prefix, std::size_t layer, std::size_t dir) {
  return prefix + ".l" + std::to_string(layer) + "." + kDirectionNames[dir];
}

/// Gate nonlinearities and state update from the summed pre-activation z = [1, 4h].
std::pair<Var, Var> lstm_update(Graph& g, Var z, Var c_prev, std::size_t h) {
  Var i = g.activation(nn::Activation::kSigmoid, g.slice_cols(z, 0, h));
  Var f = g.activation(nn::Activation::kSigmoid, g.slice_cols(z, h, h));
  Var cand = g.activation(nn::Activation::kTanh, g.slice_cols(z, 2 * h, h));
  Var o = g.activation(nn::Activation::kSigmoid, g.slice_cols(z, 3 * h, h));
  Var c = g.add(g.mul(f, c_prev), g.mul(i, cand));
  Var h_new = g.mul(o, g.activation(nn::Activation::kTanh, c));
  return {h_new, c};
}

/// Runs one direction over precomputed input projections pre = x W_ih + b.
Var run_direction(Graph& g, Var pre, const LSTMCellParams& p, Direction dir) {
  const std::size_t steps = g.value(pre).rows();
  const std::size_t h = p.hidden();
  Var w_hh = g.param(*p.w_hh);
  Var state_h = g.constant(nn::Tensor({1, h}));
  Var state_c = g.constant(nn::Tensor({1, h}));
  std::vector<Var> outputs(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = dir == kForward ? s : steps - 1 - s;
    Var z = g.add(g.row(pre, t), g.matmul(state_h, w_hh));
    std::tie(state_h, state_c) = lstm_update(g, z, state_c, h);
    outputs[t] = state_h;
  }
  return g.stack_rows(outputs);
}

LSTMCellParams create_cell(nn::ParamStore& store, const std::string& name, std::size_t d_in,
                           std::size_t h, nn::RngStream& init) {
  store.add(name + ".w_ih", nn::glorot_uniform(d_in, 4 * h, init));
  store.add(name + ".w_hh", nn::glorot_uniform(h, 4 * h, init));
  store.add(name + ".b", nn::Tensor({4 * h}));
  return {&store.at(name + ".w_ih"), &store.at(name + ".w_hh"), &store.at(name + ".b")};
}

}  // namespace

void EncoderConfig::validate() const {
  if (d_model == 0 || d_model % 2 != 0) {
    throw ConfigError("rnn: d_model must be positive and even, got " + std::to_string(d_model));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("rnn: dropout must be in [0, 1)");
}

EncoderParams EncoderParams::create(nn::ParamStore& store, const std::string& prefix,
                                    const EncoderConfig& cfg, nn::RngStream& init) {
  cfg.validate();
  EncoderParams p;
  for (std::size_t layer = 0; layer < EncoderConfig::kNumLayers; ++layer) {
    for (std::size_t dir = 0; dir < 2; ++dir) {
      p.layers[layer][dir] =
          create_cell(store, cell_prefix(prefix, layer, dir), cfg.d_model, cfg.hidden(), init);
    }
  }
  return p;
}

EncoderParams EncoderParams::bind(nn::ParamStore& store, const std::string& prefix) {
  EncoderParams p;
  for (std::size_t layer = 0; layer < EncoderConfig::kNumLayers; ++layer) {
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const std::string name = cell_prefix(prefix, layer, dir);
      p.layers[layer][dir] = {&store.at(name + ".w_ih"), &store.at(name + ".w_hh"),
                              &store.at(name + ".b")};
    }
  }
  return p;
}

std::pair<Var, Var> lstm_cell_step(Graph& g, Var x_t, Var h_prev, Var c_prev,
                                   const LSTMCellParams& p) {
  const std::size_t h = p.hidden();
  if (g.value(h_prev).cols() != h || g.value(c_prev).cols() != h) {
    throw DimensionError("lstm_cell_step: state width does not match hidden size " +
                         std::to_string(h));
  }
  Var z = g.add(g.add_bias(g.matmul(x_t, g.param(*p.w_ih)), g.param(*p.b)),
                g.matmul(h_prev, g.param(*p.w_hh)));
  return lstm_update(g, z, c_prev, h);
}

Var encoder_forward(Graph& g, Var x, const EncoderConfig& cfg, const EncoderParams& params,
                    nn::RngStream& rng, bool training) {
  cfg.validate();
  if (g.value(x).rows() == 0) throw DimensionError("encoder_forward: empty sequence");
  if (g.value(x).cols() != cfg.d_model) {
    throw DimensionError("encoder_forward: input width " + std::to_string(g.value(x).cols()) +
                         " but d_model is " + std::to_string(cfg.d_model));
  }
  Var current = x;
  for (std::size_t layer = 0; layer < EncoderConfig::kNumLayers; ++layer) {
    current = g.dropout(current, cfg.dropout_p, rng, training);
    Var halves[2];
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const LSTMCellParams& cell = params.layers[layer][dir];
      Var pre = g.add_bias(g.matmul(current, g.param(*cell.w_ih)), g.param(*cell.b));
      halves[dir] = run_direction(g, pre, cell, static_cast<Direction>(dir));
    }
    current = g.concat_cols(halves);
  }
  return current;
}

Var residual_combine(Graph& g, Var moe_out, Var enc_out) {
  if (g.value(moe_out).shape() != g.value(enc_out).shape()) {
    throw DimensionError("residual_combine: " + nn::shape_to_string(g.value(moe_out).shape()) +
                         " vs " + nn::shape_to_string(g.value(enc_out).shape()));
  }
  return g.add(moe_out, enc_out);
}

}  // namespace seke::recurrent
