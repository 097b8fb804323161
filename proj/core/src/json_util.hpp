// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

// Strict reading of JSON configuration objects: every key must be consumed,
// and type mismatches surface as ConfigError naming the key path.

#pragma once

#include <set>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "seke/errors.hpp"

namespace seke::detail {

class StrictReader {
 public:
  StrictReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void read(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const nlohmann::json& v = j_.at(key);
    const std::string path = where_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(path + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
    }
    try {
      out = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }

  /// Nested object under `key`, or nullptr when absent.
  const nlohmann::json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace seke::detail
