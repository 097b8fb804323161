// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "json_util.hpp"
#include "seke/errors.hpp"

namespace seke::training {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be positive");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (selection_k < 1) throw ConfigError("train: selection_k must be >= 1");
  if (jobs < 1) throw ConfigError("train: jobs must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"batch_size", batch_size},
          {"seed", seed},
          {"early_stopping", early_stopping},
          {"selection_k", selection_k}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig c = base;
  detail::StrictReader r(j, "train");
  r.read("lr", c.lr);
  r.read("max_epochs", c.max_epochs);
  r.read("patience", c.patience);
  r.read("batch_size", c.batch_size);
  r.read("seed", c.seed);
  r.read("early_stopping", c.early_stopping);
  r.read("selection_k", c.selection_k);
  r.finish();
  return c;
}

double TrainHistory::best_metric() const {
  return best_epoch == 0 ? 0.0 : epochs.at(best_epoch - 1).dev_metric;
}

nlohmann::json TrainHistory::to_json(bool with_times) const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json row = {
        {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_metric", e.dev_metric}};
    if (with_times) row["seconds"] = e.seconds;
    rows.push_back(std::move(row));
  }
  return {{"epochs", rows}, {"best_epoch", best_epoch}};
}

EarlyStopper::EarlyStopper(std::size_t patience, bool enabled)
    : patience_(patience), enabled_(enabled) {
  if (patience < 1) throw ConfigError("early stopping: patience must be >= 1");
}

bool EarlyStopper::observe(double metric) {
  ++epoch_;
  if (best_epoch_ == 0 || metric > best_) {
    best_ = metric;
    best_epoch_ = epoch_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

Split split_validation(std::span<const data::Document> docs, std::uint64_t seed) {
  if (docs.size() < 5) {
    throw DataError("split_validation: need at least 5 documents, got " +
                    std::to_string(docs.size()));
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::RngStream rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t n_train = docs.size() * 8 / 10;
  Split s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? s.train : s.dev).push_back(docs[order[i]]);
  }
  return s;
}

Example make_example(const data::Document& doc, std::size_t max_len) {
  const auto tokens = model::document_tokens(doc.text, max_len);
  Example ex;
  ex.inputs = model::model_inputs(tokens);
  for (labeling::BIO b : labeling::annotate_bio(tokens, doc.keywords)) {
    ex.targets.push_back(static_cast<int>(b));
  }
  return ex;
}

double train_step(model::KeyphraseModel& model, nn::AdamState& adam,
                  std::span<const Example* const> batch, nn::RngStream& rng) {
  std::size_t total_tokens = 0;
  for (const Example* ex : batch) total_tokens += ex->targets.size();
  if (total_tokens == 0) return 0.0;
  nn::ParamStore& store = model.params();
  double batch_loss = 0.0;
  for (const Example* ex : batch) {
    const std::size_t n = ex->targets.size();
    if (n == 0) continue;
    nn::Graph g(true);
    const model::ForwardResult fwd = model.forward(g, ex->inputs, rng, true);
    const auto mask = std::make_unique<bool[]>(n);
    std::fill_n(mask.get(), n, true);
    const nn::Var loss = g.cross_entropy(fwd.logits, ex->targets, std::span(mask.get(), n));
    const double value = g.value(loss)[0];
    const double weight = static_cast<double>(n) / static_cast<double>(total_tokens);
    batch_loss += weight * value;
    if (!std::isfinite(value)) break;
    g.backward(loss, weight);
  }
  if (!std::isfinite(batch_loss)) {
    store.zero_grad();
    return batch_loss;
  }
  nn::adam_step(store, adam);
  return batch_loss;
}

std::vector<DocumentPrediction> predict(const model::KeyphraseModel& model,
                                        std::span<const data::Document> docs, std::size_t jobs,
                                        bool keep_decisions) {
  std::vector<DocumentPrediction> out(docs.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < docs.size(); i += stride) {
      DocumentPrediction& p = out[i];
      p.id = docs[i].id;
      p.sequence = model.label(docs[i].text, keep_decisions ? &p.decisions : nullptr);
      p.keyphrases = labeling::postprocess(labeling::decode_keyphrases(p.sequence));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, docs.size()));
  if (workers == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        work(w, workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::map<std::string, labeling::KeyphrasePrediction> prediction_map(
    std::span<const DocumentPrediction> preds) {
  std::map<std::string, labeling::KeyphrasePrediction> out;
  for (const auto& p : preds) out.emplace(p.id, p.keyphrases);
  return out;
}

double dev_f1(const model::KeyphraseModel& model, std::span<const data::Document> docs,
              std::size_t k, std::size_t jobs) {
  const auto preds = predict(model, docs, jobs);
  const auto gold = data::gold_of(docs);
  const std::size_t ks[] = {k};
  return evaluation::evaluate_corpus(prediction_map(preds), gold, ks).macro.at(k).f1;
}

namespace {

model::KeyphraseModel warm_start(const model::ModelConfig& cfg,
                                 const model::KeyphraseModel& init, std::uint64_t seed) {
  nn::ParamStore copy;
  for (const auto& [name, p] : init.params()) copy.add(name, p.value, p.trainable);
  try {
    return model::KeyphraseModel::bind(cfg, init.vocab(), std::move(copy), seed);
  } catch (const DataError& e) {
    throw ConfigError(std::string("init checkpoint is incompatible with the config: ") +
                      e.what());
  }
}

}  // namespace

TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const data::Document> train_docs,
                  std::span<const data::Document> dev_docs, const model::KeyphraseModel* init,
                  const backbone::EmbeddingTable* table, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (train_docs.empty() || dev_docs.empty()) {
    throw DataError("train: training and validation sets must be nonempty");
  }

  model::KeyphraseModel model = [&] {
    if (init) return warm_start(model_cfg, *init, cfg.seed);
    std::vector<std::string> texts;
    for (const auto& d : train_docs) texts.push_back(d.text);
    return model::KeyphraseModel::create(model_cfg, model::build_vocab(texts, model_cfg.max_len),
                                         cfg.seed, table);
  }();

  std::vector<Example> examples;
  for (const auto& d : train_docs) {
    Example ex = make_example(d, model.config().max_len);
    if (!ex.targets.empty()) examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw DataError("train: every training document is empty");

  nn::AdamState adam;
  adam.lr = cfg.lr;
  const nn::RngStream root(cfg.seed, "train");
  nn::RngStream shuffle_rng = root.substream("shuffle");
  nn::RngStream noise_rng = root.substream("dropout-and-noise");

  EarlyStopper stopper(cfg.patience, cfg.early_stopping);
  TrainResult result{model.clone(), {}};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Example*> batch;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t b = 0; b * cfg.batch_size < order.size(); ++b) {
      batch.clear();
      std::size_t tokens = 0;
      for (std::size_t i = b * cfg.batch_size;
           i < std::min(order.size(), (b + 1) * cfg.batch_size); ++i) {
        batch.push_back(&examples[order[i]]);
        tokens += examples[order[i]].targets.size();
      }
      const double loss = train_step(model, adam, batch, noise_rng);
      if (!std::isfinite(loss)) {
        throw DivergenceError(
            fmt::format("non-finite training loss in epoch {}, batch {}", epoch, b + 1));
      }
      loss_sum += loss * static_cast<double>(tokens);
      token_sum += tokens;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(token_sum);
    rec.dev_metric = dev_f1(model, dev_docs, cfg.selection_k, cfg.jobs);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (stopper.observe(rec.dev_metric)) result.best = model.clone();
    result.history.epochs.push_back(rec);
    result.history.best_epoch = stopper.best_epoch();
    if (on_epoch) on_epoch(rec);
    if (stopper.should_stop()) break;
  }
  result.best.round_to_float();
  return result;
}

}  // namespace seke::training
