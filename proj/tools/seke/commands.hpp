// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seke/run_config.hpp"

namespace seke::cli {

/// Options shared by every subcommand. Unset optionals leave the config file's
/// value in place.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  std::vector<std::string> argv;
};

/// Flag overrides for the model and training sections of the config.
struct ModelOverrides {
  std::optional<bool> moe;
  std::optional<bool> rnn;
  std::optional<std::size_t> experts;
  std::optional<std::size_t> top_k;
  std::optional<std::string> freeze;
  std::optional<std::string> backbone;
  std::optional<std::string> embeddings;
  std::optional<std::size_t> max_len;
  std::optional<double> dropout;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> selection_k;
  bool no_early_stopping = false;
  std::vector<std::size_t> ks;
};

struct TrainOptions {
  std::string train;
  std::string dev;
  std::string checkpoint;
  std::string init;
};

struct PredictOptions {
  std::string checkpoint;
  std::string input;
};

struct EvalOptions {
  std::string checkpoint;
  std::string predictions;
  std::string input;
  std::vector<std::size_t> ks;
};

struct AnalyzeOptions {
  std::string checkpoint;
  std::string input;
  std::string annotations;
  std::string trace;
  std::vector<std::string> extra_categories;
};

struct AblateOptions {
  std::string train;
  std::string dev;
  std::string test;
  std::vector<std::uint64_t> seeds;
};

struct GenOptions {
  std::size_t n_docs = 250;
  std::string rule = "marker";
  std::string annotations;
};

/// Loads the config file (or defaults), applies the overrides and validates.
RunConfig resolve_config(const CommonOptions& common, const ModelOverrides& overrides);

int cmd_train(const CommonOptions& common, const ModelOverrides& overrides,
              const TrainOptions& opts);
int cmd_predict(const CommonOptions& common, const PredictOptions& opts);
int cmd_eval(const CommonOptions& common, const EvalOptions& opts);
int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& opts);
int cmd_ablate(const CommonOptions& common, const ModelOverrides& overrides,
               const AblateOptions& opts);
int cmd_gen_synthetic(const CommonOptions& common, const GenOptions& opts);

}  // namespace seke::cli
