// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/backbone.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "seke/errors.hpp"

namespace seke::backbone {

namespace {

constexpr const char* kPrefix = "backbone";

std::string layer_name(std::size_t layer, std::string_view leaf) {
  return std::string(kPrefix) + ".l" + std::to_string(layer) + "." + std::string(leaf);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

// --- Vocab -----------------------------------------------------------------

Vocab::Vocab() : tokens_{"<pad>", "<unk>"} {}

int Vocab::add(std::string_view token) {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocab::entries() const {
  return {tokens_.begin() + 2, tokens_.end()};
}

Vocab Vocab::from_entries(std::span<const std::string> entries) {
  Vocab v;
  for (const auto& e : entries) {
    if (v.ids_.contains(e)) throw DataError("vocab: duplicate entry '" + e + "'");
    v.add(e);
  }
  return v;
}

// --- LoRA --------------------------------------------------------------------

nn::Tensor lora_apply(const nn::Tensor& w, const nn::Tensor& a, const nn::Tensor& b,
                      double alpha) {
  const std::size_t d = w.rows();
  const std::size_t r = a.rows();
  if (r > d) {
    throw ConfigError("lora: rank " + std::to_string(r) + " exceeds dimension " +
                      std::to_string(d));
  }
  if (w.cols() != d || a.cols() != d || b.rows() != d || b.cols() != r) {
    throw DimensionError("lora: W " + nn::shape_to_string(w.shape()) + ", A " +
                         nn::shape_to_string(a.shape()) + ", B " +
                         nn::shape_to_string(b.shape()));
  }
  nn::Tensor delta = nn::matmul(b, a);
  const double s = alpha / static_cast<double>(r);
  nn::Tensor out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * delta[i];
  return out;
}

Var lora_project(Graph& g, Var x, nn::Param& w, const LoRAAdapter& lora, double lora_dropout,
                 nn::RngStream& rng, bool training) {
  Var base = g.matmul(x, g.param(w));
  Var adapter_in = g.dropout(x, lora_dropout, rng, training);
  Var delta = g.matmul(g.matmul(adapter_in, g.param(*lora.b)), g.param(*lora.a));
  return g.add(base, g.scale(delta, lora.scaling()));
}

// --- ToyTransformer ------------------------------------------------------------

void ToyTransformerConfig::validate() const {
  if (num_layers == 0 || num_heads == 0 || d_model == 0) {
    throw ConfigError("transformer: num_layers, num_heads and d_model must be positive");
  }
  if (d_model % num_heads != 0) {
    throw ConfigError("transformer: d_model " + std::to_string(d_model) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (max_len == 0) throw ConfigError("transformer: max_len must be positive");
  if (lora_rank == 0 || lora_rank > d_model) {
    throw ConfigError("lora: rank " + std::to_string(lora_rank) + " must be in [1, d_model=" +
                      std::to_string(d_model) + "]");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0) || !(lora_dropout >= 0.0 && lora_dropout < 1.0)) {
    throw ConfigError("transformer: dropout must be in [0, 1)");
  }
}

ToyTransformer::ToyTransformer(nn::ParamStore& store, ToyTransformerConfig cfg, Vocab vocab,
                               nn::RngStream& init)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model;
  const std::size_t r = cfg_.lora_rank;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
  store.add(std::string(kPrefix) + ".tok_emb", nn::normal_tensor({vocab_.size(), d}, emb_std, init));
  store.add(std::string(kPrefix) + ".pos_emb", nn::normal_tensor({cfg_.max_len, d}, emb_std, init));
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    store.add(layer_name(l, "ln1.g"), nn::Tensor({d}, 1.0));
    store.add(layer_name(l, "ln1.b"), nn::Tensor({d}));
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      store.add(layer_name(l, w), nn::glorot_uniform(d, d, init));
    }
    for (const char* target : {"attn.lora_q", "attn.lora_v"}) {
      store.add(layer_name(l, std::string(target) + ".a"), nn::glorot_uniform(r, d, init));
      store.add(layer_name(l, std::string(target) + ".b"), nn::Tensor({d, r}));
    }
    store.add(layer_name(l, "ln2.g"), nn::Tensor({d}, 1.0));
    store.add(layer_name(l, "ln2.b"), nn::Tensor({d}));
    store.add(layer_name(l, "ff.w1"), nn::glorot_uniform(d, cfg_.ff_width(), init));
    store.add(layer_name(l, "ff.b1"), nn::Tensor({cfg_.ff_width()}));
    store.add(layer_name(l, "ff.w2"), nn::glorot_uniform(cfg_.ff_width(), d, init));
    store.add(layer_name(l, "ff.b2"), nn::Tensor({d}));
  }
  store.add(std::string(kPrefix) + ".ln_f.g", nn::Tensor({d}, 1.0));
  store.add(std::string(kPrefix) + ".ln_f.b", nn::Tensor({d}));
  bind(store);
}

ToyTransformer::ToyTransformer(nn::ParamStore& store, ToyTransformerConfig cfg, Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  bind(store);
  if (tok_emb_->value.rows() != vocab_.size()) {
    throw DataError("transformer: embedding table has " +
                    std::to_string(tok_emb_->value.rows()) + " rows but vocab has " +
                    std::to_string(vocab_.size()) + " entries");
  }
}

void ToyTransformer::bind(nn::ParamStore& store) {
  tok_emb_ = &store.at(std::string(kPrefix) + ".tok_emb");
  pos_emb_ = &store.at(std::string(kPrefix) + ".pos_emb");
  lnf_g_ = &store.at(std::string(kPrefix) + ".ln_f.g");
  lnf_b_ = &store.at(std::string(kPrefix) + ".ln_f.b");
  layers_.clear();
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    auto p = [&](std::string_view leaf) { return &store.at(layer_name(l, leaf)); };
    Layer layer{};
    layer.ln1_g = p("ln1.g");
    layer.ln1_b = p("ln1.b");
    layer.wq = p("attn.wq");
    layer.wk = p("attn.wk");
    layer.wv = p("attn.wv");
    layer.wo = p("attn.wo");
    layer.lora_q = {p("attn.lora_q.a"), p("attn.lora_q.b"), cfg_.lora_alpha};
    layer.lora_v = {p("attn.lora_v.a"), p("attn.lora_v.b"), cfg_.lora_alpha};
    layer.ln2_g = p("ln2.g");
    layer.ln2_b = p("ln2.b");
    layer.ff_w1 = p("ff.w1");
    layer.ff_b1 = p("ff.b1");
    layer.ff_w2 = p("ff.w2");
    layer.ff_b2 = p("ff.b2");
    layers_.push_back(layer);
  }
}

Var ToyTransformer::encode(Graph& g, std::span<const std::string> tokens, nn::RngStream& rng,
                           bool training) const {
  const std::vector<int> ids = vocab_.encode(tokens);
  return encode_ids(g, ids, rng, training);
}

Var ToyTransformer::attention(Graph& g, const Layer& layer, Var x, std::span<const int> ids,
                              nn::RngStream& rng, bool training,
                              std::vector<nn::Tensor>* probs) const {
  const std::size_t steps = ids.size();
  const std::size_t heads = cfg_.num_heads;
  const std::size_t dh = cfg_.d_model / heads;
  Var q = lora_project(g, x, *layer.wq, layer.lora_q, cfg_.lora_dropout, rng, training);
  Var k = g.matmul(x, g.param(*layer.wk));
  Var v = lora_project(g, x, *layer.wv, layer.lora_v, cfg_.lora_dropout, rng, training);

  std::vector<bool> keep(steps * steps);
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j < steps; ++j) keep[i * steps + j] = ids[j] != Vocab::kPad;
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = g.slice_cols(q, h * dh, dh);
    Var kh = g.slice_cols(k, h * dh, dh);
    Var vh = g.slice_cols(v, h * dh, dh);
    Var scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt);
    Var p = g.softmax(g.mask_fill(scores, keep));
    if (probs) probs->push_back(g.value(p));
    outs.push_back(g.matmul(p, vh));
  }
  return g.matmul(g.concat_cols(outs), g.param(*layer.wo));
}

Var ToyTransformer::encode_ids(Graph& g, std::span<const int> ids, nn::RngStream& rng,
                               bool training, std::vector<nn::Tensor>* attention_probs) const {
  if (ids.empty()) throw DimensionError("transformer: empty sequence");
  if (ids.size() > cfg_.max_len) {
    throw DimensionError("transformer: sequence of " + std::to_string(ids.size()) +
                         " tokens exceeds max_len " + std::to_string(cfg_.max_len));
  }
  std::vector<std::size_t> rows(ids.size());
  std::vector<std::size_t> positions(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const int id = ids[t];
    rows[t] = (id >= 0 && static_cast<std::size_t>(id) < vocab_.size())
                  ? static_cast<std::size_t>(id)
                  : static_cast<std::size_t>(Vocab::kUnk);
    positions[t] = t;
  }
  Var x = g.add(g.gather_rows(g.param(*tok_emb_), rows), g.gather_rows(g.param(*pos_emb_), positions));
  x = g.dropout(x, cfg_.dropout_p, rng, training);
  for (const Layer& layer : layers_) {
    Var h = g.layer_norm(x, g.param(*layer.ln1_g), g.param(*layer.ln1_b));
    Var attn = attention(g, layer, h, ids, rng, training, attention_probs);
    x = g.add(x, g.dropout(attn, cfg_.dropout_p, rng, training));
    h = g.layer_norm(x, g.param(*layer.ln2_g), g.param(*layer.ln2_b));
    Var ff = g.activation(nn::Activation::kRelu,
                          g.add_bias(g.matmul(h, g.param(*layer.ff_w1)), g.param(*layer.ff_b1)));
    ff = g.add_bias(g.matmul(ff, g.param(*layer.ff_w2)), g.param(*layer.ff_b2));
    x = g.add(x, g.dropout(ff, cfg_.dropout_p, rng, training));
  }
  return g.layer_norm(x, g.param(*lnf_g_), g.param(*lnf_b_));
}

// --- Static embeddings -----------------------------------------------------------

EmbeddingTable parse_embedding_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError("embeddings: line 1: missing header");
  std::istringstream header(line);
  long long count = -1;
  long long dim = -1;
  std::string extra;
  if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim <= 0) {
    throw DataError("embeddings: line 1: expected '<count> <dim>'");
  }
  EmbeddingTable table;
  std::vector<double> values(2 * static_cast<std::size_t>(dim), 0.0);
  std::size_t entries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    std::vector<double> vec;
    vec.reserve(static_cast<std::size_t>(dim));
    std::string field;
    while (row >> field) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError("embeddings: line " + std::to_string(line_no) + ": bad number '" +
                        field + "'");
      }
    }
    if (vec.size() != static_cast<std::size_t>(dim)) {
      throw DataError("embeddings: line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(vec.size()));
    }
    ++entries;
    const std::string key = ascii_lower(token);
    if (table.vocab.id(key) != Vocab::kUnk) continue;
    table.vocab.add(key);
    values.insert(values.end(), vec.begin(), vec.end());
  }
  if (entries != static_cast<std::size_t>(count)) {
    throw DataError("embeddings: header declares " + std::to_string(count) + " entries, found " +
                    std::to_string(entries));
  }
  table.vectors = nn::Tensor({table.vocab.size(), static_cast<std::size_t>(dim)}, std::move(values));
  return table;
}

EmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("embeddings: cannot open " + path);
  return parse_embedding_table(in);
}

nn::Tensor static_encode(std::span<const std::string> tokens, const EmbeddingTable& table) {
  nn::Tensor out({tokens.size(), table.dim()});
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const int id = table.vocab.id(ascii_lower(tokens[t]));
    auto src = table.vectors.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

StaticBackbone::StaticBackbone(nn::ParamStore& store, const EmbeddingTable& table,
                               std::size_t max_len)
    : vocab_(table.vocab), max_len_(max_len) {
  table_ = &store.add(std::string(kPrefix) + ".static.table", table.vectors, false);
}

StaticBackbone::StaticBackbone(nn::ParamStore& store, Vocab vocab, std::size_t max_len)
    : vocab_(std::move(vocab)), max_len_(max_len) {
  table_ = &store.at(std::string(kPrefix) + ".static.table");
  table_->trainable = false;
  if (table_->value.rows() != vocab_.size()) {
    throw DataError("static backbone: table rows do not match vocab size");
  }
}

Var StaticBackbone::encode(Graph& g, std::span<const std::string> tokens, nn::RngStream&,
                           bool) const {
  std::vector<std::size_t> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(static_cast<std::size_t>(vocab_.id(ascii_lower(t))));
  return g.gather_rows(g.param(*table_), rows);
}

// --- Freeze policy -----------------------------------------------------------------

FreezeMode parse_freeze_mode(std::string_view name) {
  if (name == "lora") return FreezeMode::kLora;
  if (name == "full") return FreezeMode::kFull;
  if (name == "frozen") return FreezeMode::kFrozen;
  throw ConfigError("unknown freeze mode: " + std::string(name));
}

std::string_view to_string(FreezeMode mode) {
  switch (mode) {
    case FreezeMode::kLora:
      return "lora";
    case FreezeMode::kFull:
      return "full";
    case FreezeMode::kFrozen:
      return "frozen";
  }
  return "?";
}

void freeze_policy(nn::ParamStore& store, FreezeMode mode) {
  for (auto& [name, p] : store) {
    const bool in_backbone = name.starts_with("backbone.");
    if (!in_backbone) {
      p.trainable = true;
    } else if (name.find(".static.") != std::string::npos) {
      p.trainable = false;
    } else {
      switch (mode) {
        case FreezeMode::kLora:
          p.trainable = name.find(".lora_") != std::string::npos;
          break;
        case FreezeMode::kFull:
          p.trainable = true;
          break;
        case FreezeMode::kFrozen:
          p.trainable = false;
          break;
      }
    }
  }
}

}  // namespace seke::backbone
