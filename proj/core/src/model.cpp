// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/model.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "seke/errors.hpp"
#include "seke/evaluation.hpp"
#include "seke/nn/ops.hpp"

namespace seke::model {

namespace {

constexpr const char* kMoePrefix = "head.moe";
constexpr const char* kRnnPrefix = "head.rnn";
constexpr const char* kClsWeight = "head.cls.w";
constexpr const char* kClsBias = "head.cls.b";

HeadConfig with_width(HeadConfig head, std::size_t d) {
  head.moe.d_model = d;
  head.rnn.d_model = d;
  return head;
}

void expect_shape(const nn::Param& p, const nn::Shape& shape, const std::string& name) {
  if (p.value.shape() != shape) {
    throw DataError("parameter " + name + " has shape " + nn::shape_to_string(p.value.shape()) +
                    ", expected " + nn::shape_to_string(shape));
  }
}

}  // namespace

BackboneKind parse_backbone_kind(std::string_view name) {
  if (name == "toy") return BackboneKind::kToy;
  if (name == "static") return BackboneKind::kStatic;
  throw ConfigError("unknown backbone \"" + std::string(name) + "\" (expected toy or static)");
}

std::string_view to_string(BackboneKind kind) {
  return kind == BackboneKind::kToy ? "toy" : "static";
}

void ModelConfig::set_dropout(double p) {
  toy.dropout_p = p;
  toy.lora_dropout = p;
  head.moe.dropout_p = p;
  head.rnn.dropout_p = p;
}

void ModelConfig::validate() const {
  if (max_len == 0) throw ConfigError("model: max_len must be positive");
  if (backbone == BackboneKind::kToy) {
    toy.validate();
    if (max_len > toy.max_len) {
      throw ConfigError("model: max_len " + std::to_string(max_len) +
                        " exceeds the transformer's position table (" +
                        std::to_string(toy.max_len) + ")");
    }
  } else if (embeddings_path.empty()) {
    throw ConfigError("model: static backbone requires an embeddings path");
  }
  // Widths follow the backbone; use a placeholder even width for the static case.
  const std::size_t d = backbone == BackboneKind::kToy ? toy.d_model : 2;
  const HeadConfig head_cfg = with_width(head, d);
  head_cfg.moe.validate();
  if (!(head.rnn.dropout_p >= 0.0 && head.rnn.dropout_p < 1.0)) {
    throw ConfigError("rnn: dropout must be in [0, 1)");
  }
  if (head.use_rnn) head_cfg.rnn.validate();
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"backbone", to_string(backbone)},
      {"toy",
       {{"num_layers", toy.num_layers},
        {"num_heads", toy.num_heads},
        {"d_model", toy.d_model},
        {"d_ff", toy.d_ff},
        {"max_len", toy.max_len},
        {"lora_rank", toy.lora_rank},
        {"lora_alpha", toy.lora_alpha},
        {"lora_dropout", toy.lora_dropout},
        {"dropout_p", toy.dropout_p}}},
      {"embeddings", embeddings_path},
      {"max_len", max_len},
      {"head",
       {{"use_moe", head.use_moe},
        {"use_rnn", head.use_rnn},
        {"moe",
         {{"n_experts", head.moe.n_experts},
          {"top_k", head.moe.top_k},
          {"d_hidden", head.moe.d_hidden},
          {"dropout_p", head.moe.dropout_p},
          {"noise", head.moe.noise_enabled_training},
          {"zero_init_router", head.moe.zero_init_router}}},
        {"rnn", {{"dropout_p", head.rnn.dropout_p}}}}},
      {"freeze", backbone::to_string(freeze)},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) { return from_json(j, ModelConfig{}); }

ModelConfig ModelConfig::from_json(const nlohmann::json& j, const ModelConfig& base) {
  ModelConfig c = base;
  detail::StrictReader r(j, "model");
  std::string kind(to_string(c.backbone));
  r.read("backbone", kind);
  c.backbone = parse_backbone_kind(kind);
  if (const auto* t = r.child("toy")) {
    detail::StrictReader tr(*t, r.path("toy"));
    tr.read("num_layers", c.toy.num_layers);
    tr.read("num_heads", c.toy.num_heads);
    tr.read("d_model", c.toy.d_model);
    tr.read("d_ff", c.toy.d_ff);
    tr.read("max_len", c.toy.max_len);
    tr.read("lora_rank", c.toy.lora_rank);
    tr.read("lora_alpha", c.toy.lora_alpha);
    tr.read("lora_dropout", c.toy.lora_dropout);
    tr.read("dropout_p", c.toy.dropout_p);
    tr.finish();
  }
  r.read("embeddings", c.embeddings_path);
  r.read("max_len", c.max_len);
  if (const auto* h = r.child("head")) {
    detail::StrictReader hr(*h, r.path("head"));
    hr.read("use_moe", c.head.use_moe);
    hr.read("use_rnn", c.head.use_rnn);
    if (const auto* m = hr.child("moe")) {
      detail::StrictReader mr(*m, hr.path("moe"));
      mr.read("n_experts", c.head.moe.n_experts);
      mr.read("top_k", c.head.moe.top_k);
      mr.read("d_hidden", c.head.moe.d_hidden);
      mr.read("dropout_p", c.head.moe.dropout_p);
      mr.read("noise", c.head.moe.noise_enabled_training);
      mr.read("zero_init_router", c.head.moe.zero_init_router);
      mr.finish();
    }
    if (const auto* e = hr.child("rnn")) {
      detail::StrictReader er(*e, hr.path("rnn"));
      er.read("dropout_p", c.head.rnn.dropout_p);
      er.finish();
    }
    hr.finish();
  }
  std::string freeze(backbone::to_string(c.freeze));
  r.read("freeze", freeze);
  c.freeze = backbone::parse_freeze_mode(freeze);
  r.finish();
  return c;
}

std::vector<labeling::Token> document_tokens(std::string_view text, std::size_t max_len) {
  std::vector<labeling::Token> tokens = labeling::tokenize(text);
  if (tokens.size() > max_len) tokens.resize(max_len);
  return tokens;
}

std::vector<std::string> model_inputs(std::span<const labeling::Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(evaluation::normalize_text(t.surface));
  return out;
}

backbone::Vocab build_vocab(std::span<const std::string> texts, std::size_t max_len) {
  backbone::Vocab vocab;
  for (const auto& text : texts) {
    for (const auto& input : model_inputs(document_tokens(text, max_len))) vocab.add(input);
  }
  return vocab;
}

// --- KeyphraseModel -------------------------------------------------------

KeyphraseModel::KeyphraseModel(ModelConfig cfg, std::unique_ptr<nn::ParamStore> store,
                               std::uint64_t seed)
    : cfg_(std::move(cfg)), store_(std::move(store)), seed_(seed) {}

KeyphraseModel::KeyphraseModel(KeyphraseModel&&) noexcept = default;
KeyphraseModel& KeyphraseModel::operator=(KeyphraseModel&&) noexcept = default;
KeyphraseModel::~KeyphraseModel() = default;

KeyphraseModel KeyphraseModel::create(ModelConfig cfg, backbone::Vocab vocab, std::uint64_t seed,
                                      const backbone::EmbeddingTable* table) {
  cfg.validate();
  KeyphraseModel m(std::move(cfg), std::make_unique<nn::ParamStore>(), seed);
  nn::RngStream init(seed, "init");
  nn::RngStream backbone_init = init.substream("backbone");
  nn::RngStream head_init = init.substream("head");
  if (m.cfg_.backbone == BackboneKind::kToy) {
    m.backbone_ = std::make_unique<backbone::ToyTransformer>(*m.store_, m.cfg_.toy,
                                                             std::move(vocab), backbone_init);
  } else {
    if (table == nullptr) throw ConfigError("model: static backbone needs an embedding table");
    m.backbone_ = std::make_unique<backbone::StaticBackbone>(*m.store_, *table, m.cfg_.max_len);
  }
  m.cfg_.head = with_width(m.cfg_.head, m.backbone_->d_model());
  const HeadConfig& head = m.cfg_.head;
  if (head.use_moe) moe::MoEParams::create(*m.store_, kMoePrefix, head.moe, head_init);
  if (head.use_rnn) {
    head.rnn.validate();
    recurrent::EncoderParams::create(*m.store_, kRnnPrefix, head.rnn, head_init);
  }
  const std::size_t d = m.backbone_->d_model();
  m.store_->add(kClsWeight, nn::glorot_uniform(d, labeling::kNumClasses, head_init));
  m.store_->add(kClsBias, nn::Tensor({labeling::kNumClasses}));
  m.bind_head();
  return m;
}

KeyphraseModel KeyphraseModel::bind(ModelConfig cfg, backbone::Vocab vocab, nn::ParamStore store,
                                    std::uint64_t seed) {
  cfg.validate();
  KeyphraseModel m(std::move(cfg), std::make_unique<nn::ParamStore>(std::move(store)), seed);
  try {
    if (m.cfg_.backbone == BackboneKind::kToy) {
      m.backbone_ =
          std::make_unique<backbone::ToyTransformer>(*m.store_, m.cfg_.toy, std::move(vocab));
    } else {
      m.backbone_ = std::make_unique<backbone::StaticBackbone>(*m.store_, std::move(vocab),
                                                               m.cfg_.max_len);
    }
    m.cfg_.head = with_width(m.cfg_.head, m.backbone_->d_model());
    m.bind_head();
  } catch (const ConfigError& e) {
    // A missing parameter means the stored tensors do not fit the config.
    throw DataError(std::string("checkpoint does not match its config: ") + e.what());
  }
  return m;
}

void KeyphraseModel::bind_head() {
  const HeadConfig& head = cfg_.head;
  const std::size_t d = backbone_->d_model();
  if (head.use_moe) {
    moe_ = moe::MoEParams::bind(*store_, kMoePrefix, head.moe);
    expect_shape(*moe_.router.w_gate, {d, head.moe.n_experts}, "head.moe router");
    for (const auto& e : moe_.experts) {
      expect_shape(*e.w1, {d, head.moe.d_hidden}, "head.moe expert w1");
      expect_shape(*e.w3, {head.moe.d_hidden, d}, "head.moe expert w3");
    }
  }
  if (head.use_rnn) {
    rnn_ = recurrent::EncoderParams::bind(*store_, kRnnPrefix);
    expect_shape(*rnn_.layers[0][0].w_ih, {d, 2 * d}, "head.rnn input weights");
  }
  cls_w_ = &store_->at(kClsWeight);
  cls_b_ = &store_->at(kClsBias);
  expect_shape(*cls_w_, {d, labeling::kNumClasses}, kClsWeight);
  expect_shape(*cls_b_, {labeling::kNumClasses}, kClsBias);
  backbone::freeze_policy(*store_, cfg_.freeze);
}

KeyphraseModel KeyphraseModel::clone() const {
  nn::ParamStore copy;
  for (const auto& [name, p] : *store_) copy.add(name, p.value, p.trainable);
  return bind(cfg_, vocab(), std::move(copy), seed_);
}

ForwardResult KeyphraseModel::forward(nn::Graph& g, std::span<const std::string> inputs,
                                      nn::RngStream& rng, bool training) const {
  ForwardResult out;
  nn::Var h = backbone_->encode(g, inputs, rng, training);
  if (cfg_.head.use_moe) {
    moe::MoEOutput m = moe::moe_forward(g, h, moe_, cfg_.head.moe, rng, training);
    h = m.y;
    out.decisions = std::move(m.decisions);
  }
  if (cfg_.head.use_rnn) {
    const nn::Var enc = recurrent::encoder_forward(g, h, cfg_.head.rnn, rnn_, rng, training);
    h = recurrent::residual_combine(g, h, enc);
  }
  out.logits = g.add_bias(g.matmul(h, g.param(*cls_w_)), g.param(*cls_b_));
  return out;
}

labeling::LabeledSequence KeyphraseModel::label(std::string_view text,
                                                std::vector<moe::GateDecision>* decisions) const {
  labeling::LabeledSequence seq;
  seq.tokens = document_tokens(text, cfg_.max_len);
  if (decisions) decisions->clear();
  if (seq.tokens.empty()) return seq;
  const std::vector<std::string> inputs = model_inputs(seq.tokens);
  nn::Graph g(false);
  nn::RngStream rng(seed_, "inference");  // unused: inference draws nothing
  ForwardResult fwd = forward(g, inputs, rng, false);
  const nn::Tensor probs = nn::softmax(g.value(fwd.logits));
  for (std::size_t t = 0; t < probs.rows(); ++t) {
    std::array<double, labeling::kNumClasses> p{};
    std::size_t best = 0;
    for (std::size_t c = 0; c < labeling::kNumClasses; ++c) {
      p[c] = probs(t, c);
      if (p[c] > p[best]) best = c;
    }
    seq.probs.push_back(p);
    seq.labels.push_back(static_cast<labeling::BIO>(best));
  }
  if (decisions) *decisions = std::move(fwd.decisions);
  return seq;
}

void KeyphraseModel::round_to_float() {
  for (auto& [_, p] : *store_) {
    for (double& v : p.value.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace seke::model
