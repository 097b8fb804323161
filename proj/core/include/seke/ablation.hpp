// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/evaluation.hpp"
#include "seke/training.hpp"

namespace seke::ablation {

struct HeadVariant {
  std::string name;
  bool use_moe = false;
  bool use_rnn = false;
};

/// base, +MoE, +RNN, +MoE+RNN.
const std::vector<HeadVariant>& head_variants();

struct VariantResult {
  HeadVariant variant;
  std::vector<evaluation::EvalReport> runs;  // one per seed, on the evaluation set
  std::vector<std::size_t> best_epochs;
  evaluation::AggregateReport aggregate;
};

struct AblationResult {
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> seeds;
  std::vector<VariantResult> variants;

  nlohmann::json to_json() const;
  /// One row per variant, "mean ± std" F1@k columns.
  std::string to_table() const;
};

using RunCallback = std::function<void(const HeadVariant&, std::uint64_t seed, double f1)>;

/// Trains every head variant once per seed on identical data and evaluates it
/// on `eval_docs`. The seed replaces `train_cfg.seed` for each run.
AblationResult run_ablation(const model::ModelConfig& base, const training::TrainConfig& train_cfg,
                            std::span<const data::Document> train_docs,
                            std::span<const data::Document> dev_docs,
                            std::span<const data::Document> eval_docs,
                            std::span<const std::uint64_t> seeds, std::span<const std::size_t> ks,
                            const backbone::EmbeddingTable* table = nullptr,
                            const RunCallback& on_run = {});

}  // namespace seke::ablation
