// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>

#include "seke/nn/graph.hpp"
#include "seke/nn/param_store.hpp"

namespace seke::recurrent {

using nn::Graph;
using nn::Var;

/// LSTM weights. Gate blocks along the 4h axis are ordered
/// input, forget, cell candidate, output.
struct LSTMCellParams {
  nn::Param* w_ih = nullptr;  // [d_in, 4h]
  nn::Param* w_hh = nullptr;  // [h, 4h]
  nn::Param* b = nullptr;     // [4h]

  std::size_t hidden() const { return w_hh->value.rows(); }
};

struct EncoderConfig {
  static constexpr std::size_t kNumLayers = 2;
  std::size_t d_model = 128;
  double dropout_p = 0.1;

  std::size_t hidden() const { return d_model / 2; }
  /// d_model must be positive and even.
  void validate() const;
};

enum Direction : std::size_t { kForward = 0, kBackward = 1 };

struct EncoderParams {
  std::array<std::array<LSTMCellParams, 2>, EncoderConfig::kNumLayers> layers;

  static EncoderParams create(nn::ParamStore& store, const std::string& prefix,
                              const EncoderConfig& cfg, nn::RngStream& init);
  static EncoderParams bind(nn::ParamStore& store, const std::string& prefix);
};

/// One LSTM step. x_t is [1, d_in], states are [1, h]. Returns (h, c).
std::pair<Var, Var> lstm_cell_step(Graph& g, Var x_t, Var h_prev, Var c_prev,
                                   const LSTMCellParams& p);

/// Dropout, BiLSTM layer 1, dropout, BiLSTM layer 2. Each layer concatenates
/// [forward ; backward] hidden states, so the output width is d_model.
/// Every call starts from zero states.
Var encoder_forward(Graph& g, Var x, const EncoderConfig& cfg, const EncoderParams& params,
                    nn::RngStream& rng, bool training);

/// Element-wise sum of the MoE sequence and the encoder sequence.
Var residual_combine(Graph& g, Var moe_out, Var enc_out);

}  // namespace seke::recurrent
