// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/model.hpp"
#include "seke/training.hpp"

namespace seke {

/// Everything a command needs, as one validated JSON document:
///
///   {"model": {...}, "train": {...}, "dropout_p": 0.1,
///    "eval": {"ks": [5, 10]}, "ablation": {"seeds": [1, 2, 3, 4, 5]},
///    "paths": {"train": "", "dev": "", "test": "", "annotations": "",
///              "checkpoint": "", "init": ""}}
///
/// Unknown keys anywhere raise ConfigError.
struct RunConfig {
  model::ModelConfig model;
  training::TrainConfig train;
  std::optional<double> dropout_p;  // overrides every dropout rate when set
  std::vector<std::size_t> ks = {5, 10};
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3, 4, 5};

  struct Paths {
    std::string train;
    std::string dev;
    std::string test;
    std::string annotations;
    std::string checkpoint;
    std::string init;
  } paths;

  /// Model config with the dropout override applied.
  model::ModelConfig effective_model() const;
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Parses and validates a config file.
  static RunConfig load(const std::string& path);
};

}  // namespace seke
