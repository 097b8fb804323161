// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace seke {

/// Invalid configuration value or combination. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not line up.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss during training. CLI exit code 4.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic that is not defined for its input (e.g. Cramer's V on a 1-column table).
/// The model lacks a component an operation needs (e.g. tracing without MoE).
class UnsupportedModel : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UndefinedStatistic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seke
