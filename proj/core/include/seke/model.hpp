// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/backbone.hpp"
#include "seke/labeling.hpp"
#include "seke/moe.hpp"
#include "seke/recurrent.hpp"

namespace seke::model {

/// Token-classification head. With both flags off the classifier reads the
/// backbone output directly.
struct HeadConfig {
  bool use_moe = true;
  bool use_rnn = true;
  moe::MoEConfig moe;
  recurrent::EncoderConfig rnn;
};

enum class BackboneKind { kToy, kStatic };

BackboneKind parse_backbone_kind(std::string_view name);
std::string_view to_string(BackboneKind kind);

struct ModelConfig {
  BackboneKind backbone = BackboneKind::kToy;
  backbone::ToyTransformerConfig toy;
  std::string embeddings_path;  // static backbone only
  std::size_t max_len = 256;    // document truncation, in tokens
  HeadConfig head;
  backbone::FreezeMode freeze = backbone::FreezeMode::kLora;

  /// Sets every dropout rate in the backbone and head.
  void set_dropout(double p);
  void validate() const;

  nlohmann::json to_json() const;
  /// Strict: unknown keys raise ConfigError. Absent keys keep their defaults.
  static ModelConfig from_json(const nlohmann::json& j);
  static ModelConfig from_json(const nlohmann::json& j, const ModelConfig& base);
};

/// Tokenizes and truncates a document to `max_len` tokens.
std::vector<labeling::Token> document_tokens(std::string_view text, std::size_t max_len);
/// Backbone inputs: NFC-normalized, case-folded surfaces.
std::vector<std::string> model_inputs(std::span<const labeling::Token> tokens);

/// Vocabulary over the normalized tokens of `texts`, in first-seen order.
backbone::Vocab build_vocab(std::span<const std::string> texts, std::size_t max_len);

struct ForwardResult {
  nn::Var logits;  // [T, 3]
  std::vector<moe::GateDecision> decisions;  // empty without an MoE layer
};

/// Backbone plus head over one parameter store.
///
/// Parameter names: "backbone.*", "head.moe.*", "head.rnn.*", "head.cls.{w,b}".
class KeyphraseModel {
 public:
  /// Fresh parameters. The static backbone needs `table`; the toy backbone
  /// uses `vocab`.
  static KeyphraseModel create(ModelConfig cfg, backbone::Vocab vocab, std::uint64_t seed,
                               const backbone::EmbeddingTable* table = nullptr);
  /// Binds to an already populated store (checkpoint restore).
  static KeyphraseModel bind(ModelConfig cfg, backbone::Vocab vocab, nn::ParamStore store,
                             std::uint64_t seed);

  KeyphraseModel(KeyphraseModel&&) noexcept;
  KeyphraseModel& operator=(KeyphraseModel&&) noexcept;
  ~KeyphraseModel();

  /// Deep copy with its own parameter store.
  KeyphraseModel clone() const;

  const ModelConfig& config() const { return cfg_; }
  const backbone::Vocab& vocab() const { return backbone_->vocab(); }
  std::uint64_t seed() const { return seed_; }
  nn::ParamStore& params() { return *store_; }
  const nn::ParamStore& params() const { return *store_; }

  /// `inputs` come from model_inputs() and must be nonempty.
  ForwardResult forward(nn::Graph& g, std::span<const std::string> inputs, nn::RngStream& rng,
                        bool training) const;

  /// Deterministic inference: labels are the per-token argmax (lower class on ties).
  labeling::LabeledSequence label(std::string_view text,
                                  std::vector<moe::GateDecision>* decisions = nullptr) const;

  /// Rounds every parameter to float32 precision, as stored in checkpoints.
  void round_to_float();

 private:
  KeyphraseModel(ModelConfig cfg, std::unique_ptr<nn::ParamStore> store, std::uint64_t seed);
  void bind_head();

  ModelConfig cfg_;
  std::unique_ptr<nn::ParamStore> store_;
  std::uint64_t seed_ = 0;
  std::unique_ptr<backbone::Backbone> backbone_;
  moe::MoEParams moe_;
  recurrent::EncoderParams rnn_;
  nn::Param* cls_w_ = nullptr;
  nn::Param* cls_b_ = nullptr;
};

}  // namespace seke::model
