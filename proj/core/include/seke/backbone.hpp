// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seke/nn/graph.hpp"
#include "seke/nn/param_store.hpp"

namespace seke::backbone {

using nn::Graph;
using nn::Var;

/// Token <-> id map. Id 0 is padding, id 1 is unknown; real tokens start at 2.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();

  /// Returns the id of `token`, inserting it if new.
  int add(std::string_view token);
  /// Id of `token`, or kUnk.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  std::vector<int> encode(std::span<const std::string> tokens) const;

  /// Real tokens in id order (ids 2..size-1).
  std::vector<std::string> entries() const;
  static Vocab from_entries(std::span<const std::string> entries);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct ToyTransformerConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t d_model = 128;
  std::size_t d_ff = 0;  // 0 means 4 * d_model
  std::size_t max_len = 256;
  std::size_t lora_rank = 16;
  double lora_alpha = 16.0;
  double lora_dropout = 0.1;
  double dropout_p = 0.1;

  std::size_t ff_width() const { return d_ff == 0 ? 4 * d_model : d_ff; }
  void validate() const;
};

struct LoRAAdapter {
  nn::Param* a = nullptr;  // [r, d]
  nn::Param* b = nullptr;  // [d, r], zero-initialized
  double alpha = 16.0;

  std::size_t rank() const { return a->value.rows(); }
  double scaling() const { return alpha / static_cast<double>(rank()); }
};

/// W + (alpha / r) * B * A. Throws ConfigError when r exceeds d.
nn::Tensor lora_apply(const nn::Tensor& w, const nn::Tensor& a, const nn::Tensor& b,
                      double alpha);

/// x * W + (alpha / r) * (dropout(x) * B) * A, i.e. x times the LoRA-effective weight
/// with dropout applied on the adapter input.
Var lora_project(Graph& g, Var x, nn::Param& w, const LoRAAdapter& lora, double lora_dropout,
                 nn::RngStream& rng, bool training);

/// Per-token contextual encoder producing [T, d_model].
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::size_t d_model() const = 0;
  virtual std::size_t max_len() const = 0;
  virtual const Vocab& vocab() const = 0;
  /// `tokens` are lowercased surfaces, already truncated to max_len().
  virtual Var encode(Graph& g, std::span<const std::string> tokens, nn::RngStream& rng,
                     bool training) const = 0;
};

/// Pre-norm transformer encoder with learned positions and LoRA on Wq/Wv.
class ToyTransformer final : public Backbone {
 public:
  /// Registers fresh parameters under "backbone.".
  ToyTransformer(nn::ParamStore& store, ToyTransformerConfig cfg, Vocab vocab,
                 nn::RngStream& init);
  /// Binds to parameters already present in `store`.
  ToyTransformer(nn::ParamStore& store, ToyTransformerConfig cfg, Vocab vocab);

  std::size_t d_model() const override { return cfg_.d_model; }
  std::size_t max_len() const override { return cfg_.max_len; }
  const Vocab& vocab() const override { return vocab_; }
  const ToyTransformerConfig& config() const { return cfg_; }

  Var encode(Graph& g, std::span<const std::string> tokens, nn::RngStream& rng,
             bool training) const override;

  /// Encodes token ids directly. Ids equal to Vocab::kPad are excluded from
  /// attention as keys. When `attention` is non-null, each layer's per-head
  /// attention matrices are appended to it.
  Var encode_ids(Graph& g, std::span<const int> ids, nn::RngStream& rng, bool training,
                 std::vector<nn::Tensor>* attention = nullptr) const;

 private:
  struct Layer {
    nn::Param *ln1_g, *ln1_b, *wq, *wk, *wv, *wo;
    LoRAAdapter lora_q, lora_v;
    nn::Param *ln2_g, *ln2_b, *ff_w1, *ff_b1, *ff_w2, *ff_b2;
  };

  void bind(nn::ParamStore& store);
  Var attention(Graph& g, const Layer& layer, Var x, std::span<const int> ids,
                nn::RngStream& rng, bool training, std::vector<nn::Tensor>* probs) const;

  ToyTransformerConfig cfg_;
  Vocab vocab_;
  nn::Param* tok_emb_ = nullptr;
  nn::Param* pos_emb_ = nullptr;
  nn::Param* lnf_g_ = nullptr;
  nn::Param* lnf_b_ = nullptr;
  std::vector<Layer> layers_;
};

/// Word vectors loaded from a text embedding file.
struct EmbeddingTable {
  Vocab vocab;
  nn::Tensor vectors;  // [vocab.size(), dim]; pad and unknown rows are zero

  std::size_t dim() const { return vectors.cols(); }
};

/// Parses "<count> <dim>" followed by one "<token> <dim floats>" line per
/// entry. Tokens are lowercased; the first occurrence wins. Throws DataError
/// naming the offending line.
EmbeddingTable parse_embedding_table(std::istream& in);
EmbeddingTable load_embedding_table(const std::string& path);

/// Row lookup by lowercased surface; unknown tokens get the zero vector.
nn::Tensor static_encode(std::span<const std::string> tokens, const EmbeddingTable& table);

/// Frozen lookup backbone. The table is stored in the ParamStore as
/// "backbone.static.table" so checkpoints are self-contained.
class StaticBackbone final : public Backbone {
 public:
  StaticBackbone(nn::ParamStore& store, const EmbeddingTable& table, std::size_t max_len = 256);
  StaticBackbone(nn::ParamStore& store, Vocab vocab, std::size_t max_len = 256);

  std::size_t d_model() const override { return table_->value.cols(); }
  std::size_t max_len() const override { return max_len_; }
  const Vocab& vocab() const override { return vocab_; }
  Var encode(Graph& g, std::span<const std::string> tokens, nn::RngStream& rng,
             bool training) const override;

 private:
  Vocab vocab_;
  nn::Param* table_ = nullptr;
  std::size_t max_len_;
};

enum class FreezeMode { kLora, kFull, kFrozen };

FreezeMode parse_freeze_mode(std::string_view name);
std::string_view to_string(FreezeMode mode);

/// Sets trainable flags by parameter name prefix:
///  - lora:   backbone LoRA A/B and the whole head
///  - full:   everything
///  - frozen: only the head
/// The static embedding table is never trainable.
void freeze_policy(nn::ParamStore& store, FreezeMode mode);

}  // namespace seke::backbone
