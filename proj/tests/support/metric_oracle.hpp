// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force F1@k scorer over a closed word pool whose stems are written out
// by hand, so neither the tokenizer nor the stemmer under test is consulted.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "seke/nn/rng.hpp"

namespace seke::testing {

struct PoolWord {
  const char* surface;
  const char* stem;
};

inline const std::vector<PoolWord>& word_pool() {
  static const std::vector<PoolWord> pool = {
      {"cat", "cat"},         {"cats", "cat"},        {"Cat", "cat"},
      {"dog", "dog"},         {"dogs", "dog"},        {"DOG", "dog"},
      {"run", "run"},         {"running", "run"},     {"runs", "run"},
      {"graph", "graph"},     {"graphs", "graph"},    {"Graph", "graph"},
      {"model", "model"},     {"models", "model"},    {"modeling", "model"},
      {"learn", "learn"},     {"learning", "learn"},  {"learns", "learn"},
      {"net", "net"},         {"nets", "net"},        {"sparse", "spars"},
  };
  return pool;
}

struct OraclePhrase {
  std::string text;
  std::string key;
};

inline OraclePhrase random_phrase(nn::RngStream& rng) {
  const auto& pool = word_pool();
  const std::size_t len = 1 + rng.below(2);
  OraclePhrase p;
  for (std::size_t i = 0; i < len; ++i) {
    const PoolWord& w = pool[rng.below(pool.size())];
    if (i > 0) {
      p.text += ' ';
      p.key += ' ';
    }
    p.text += w.surface;
    p.key += w.stem;
  }
  return p;
}

struct OracleScore {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

/// Counts distinct prediction keys among the first k that occur in gold,
/// with plain nested loops.
inline OracleScore brute_force_score(const std::vector<OraclePhrase>& preds,
                                     const std::vector<OraclePhrase>& gold, std::size_t k) {
  std::vector<std::string> gold_keys;
  for (const auto& g : gold) {
    bool seen = false;
    for (const auto& e : gold_keys) seen = seen || e == g.key;
    if (!seen) gold_keys.push_back(g.key);
  }
  const std::size_t taken = preds.size() < k ? preds.size() : k;
  std::vector<std::string> pred_keys;
  for (std::size_t i = 0; i < taken; ++i) {
    bool seen = false;
    for (const auto& e : pred_keys) seen = seen || e == preds[i].key;
    if (!seen) pred_keys.push_back(preds[i].key);
  }
  double matched = 0.0;
  for (const auto& pk : pred_keys) {
    for (const auto& gk : gold_keys) {
      if (pk == gk) {
        matched += 1.0;
        break;
      }
    }
  }
  OracleScore s;
  if (taken > 0) s.p = matched / static_cast<double>(taken);
  if (!gold_keys.empty()) s.r = matched / static_cast<double>(gold_keys.size());
  if (s.p + s.r > 0.0) s.f1 = 2.0 * s.p * s.r / (s.p + s.r);
  return s;
}

}  // namespace seke::testing
