// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/data.hpp"
#include "seke/model.hpp"
#include "seke/nn/adam.hpp"

namespace seke::training {

struct TrainConfig {
  double lr = 2e-4;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  bool early_stopping = true;
  std::size_t selection_k = 10;  // dev F1@k used for model selection
  std::size_t jobs = 1;          // worker threads for dev evaluation

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_metric = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 before the first epoch

  double best_metric() const;
  /// Wall times are omitted unless requested so that the result is reproducible.
  nlohmann::json to_json(bool with_times = false) const;
};

/// Patience-based stopping on a maximized metric. Only a strictly larger
/// value counts as an improvement, so ties keep the earliest epoch.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience, bool enabled = true);

  /// Records the next epoch's metric; true when it is the new best.
  bool observe(double metric);
  bool should_stop() const { return enabled_ && stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  std::size_t patience_;
  bool enabled_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = 0.0;
};

struct Split {
  std::vector<data::Document> train;
  std::vector<data::Document> dev;
};

/// Seeded shuffle, then the first floor(80%) documents train and the rest
/// validate. Needs at least five documents.
Split split_validation(std::span<const data::Document> docs, std::uint64_t seed);

/// Model inputs and BIO targets for one (truncated) document.
struct Example {
  std::vector<std::string> inputs;
  std::vector<int> targets;
};

Example make_example(const data::Document& doc, std::size_t max_len);

/// One Adam update on a batch. Each document's mean token loss is weighted by
/// its share of the batch's tokens, which equals the masked mean over a padded
/// batch. Returns the batch loss before the update; when it is not finite the
/// parameters are left untouched.
double train_step(model::KeyphraseModel& model, nn::AdamState& adam,
                  std::span<const Example* const> batch, nn::RngStream& rng);

struct DocumentPrediction {
  std::string id;
  labeling::LabeledSequence sequence;
  labeling::KeyphrasePrediction keyphrases;
  std::vector<moe::GateDecision> decisions;  // filled only when requested
};

/// Deterministic inference, parallel over documents with up to `jobs` threads.
std::vector<DocumentPrediction> predict(const model::KeyphraseModel& model,
                                        std::span<const data::Document> docs,
                                        std::size_t jobs = 1, bool keep_decisions = false);

std::map<std::string, labeling::KeyphrasePrediction> prediction_map(
    std::span<const DocumentPrediction> preds);

/// Macro F1@k of `model` on `docs`.
double dev_f1(const model::KeyphraseModel& model, std::span<const data::Document> docs,
              std::size_t k, std::size_t jobs = 1);

struct TrainResult {
  model::KeyphraseModel best;  // parameters of the best epoch, float32-rounded
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fine-tunes from scratch, or from `init` when given (warm start keeps the
/// init vocabulary; its tensors must fit `model_cfg`). Throws DivergenceError
/// naming epoch and batch on a non-finite loss.
TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const data::Document> train_docs,
                  std::span<const data::Document> dev_docs,
                  const model::KeyphraseModel* init = nullptr,
                  const backbone::EmbeddingTable* table = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace seke::training
