// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/ablation.hpp"

#include <fmt/format.h>

#include "seke/errors.hpp"

namespace seke::ablation {

const std::vector<HeadVariant>& head_variants() {
  static const std::vector<HeadVariant> variants = {
      {"base", false, false},
      {"+MoE", true, false},
      {"+RNN", false, true},
      {"+MoE+RNN", true, true},
  };
  return variants;
}

AblationResult run_ablation(const model::ModelConfig& base, const training::TrainConfig& train_cfg,
                            std::span<const data::Document> train_docs,
                            std::span<const data::Document> dev_docs,
                            std::span<const data::Document> eval_docs,
                            std::span<const std::uint64_t> seeds, std::span<const std::size_t> ks,
                            const backbone::EmbeddingTable* table, const RunCallback& on_run) {
  if (seeds.empty()) throw ConfigError("ablation: no seeds");
  if (ks.empty()) throw ConfigError("ablation: no ks");
  AblationResult result;
  result.ks.assign(ks.begin(), ks.end());
  result.seeds.assign(seeds.begin(), seeds.end());
  const auto gold = data::gold_of(eval_docs);
  for (const HeadVariant& v : head_variants()) {
    model::ModelConfig cfg = base;
    cfg.head.use_moe = v.use_moe;
    cfg.head.use_rnn = v.use_rnn;
    VariantResult vr;
    vr.variant = v;
    for (std::uint64_t seed : seeds) {
      training::TrainConfig tc = train_cfg;
      tc.seed = seed;
      const auto trained = training::train(cfg, tc, train_docs, dev_docs, nullptr, table);
      const auto preds = training::predict(trained.best, eval_docs, tc.jobs);
      vr.runs.push_back(evaluation::evaluate_corpus(training::prediction_map(preds), gold, ks));
      vr.best_epochs.push_back(trained.history.best_epoch);
      if (on_run) on_run(v, seed, vr.runs.back().macro.at(ks.front()).f1);
    }
    vr.aggregate = evaluation::aggregate_runs(vr.runs);
    result.variants.push_back(std::move(vr));
  }
  return result;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : variants) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (std::size_t i = 0; i < v.runs.size(); ++i) {
      nlohmann::json f1;
      for (std::size_t k : ks) f1[std::to_string(k)] = v.runs[i].macro.at(k).f1;
      per_seed.push_back({{"seed", seeds.at(i)}, {"best_epoch", v.best_epochs.at(i)}, {"f1", f1}});
    }
    rows.push_back({{"config", v.variant.name},
                    {"use_moe", v.variant.use_moe},
                    {"use_rnn", v.variant.use_rnn},
                    {"aggregate", v.aggregate.to_json()},
                    {"runs", per_seed}});
  }
  return {{"ks", ks}, {"seeds", seeds}, {"configs", rows}};
}

std::string AblationResult::to_table() const {
  std::string out = fmt::format("{:<10}", "Config");
  for (std::size_t k : ks) out += fmt::format(" {:>17}", fmt::format("F1@{}", k));
  out += '\n';
  for (const auto& v : variants) {
    out += fmt::format("{:<10}", v.variant.name);
    for (std::size_t k : ks) {
      const auto& ms = v.aggregate.f1.at(k);
      out += fmt::format(" {:>17}", fmt::format("{:.4f} ± {:.4f}", ms.mean, ms.stddev));
    }
    out += '\n';
  }
  return out;
}

}  // namespace seke::ablation
