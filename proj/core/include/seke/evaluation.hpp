// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/labeling.hpp"

namespace seke::evaluation {

/// Porter (1980) suffix stripping, original rule set. Expects ASCII lowercase
/// input; a word containing anything other than 'a'..'z' is returned as-is.
std::string porter_stem(std::string_view word);

/// NFC normalization followed by simple (per code point) case folding.
std::string normalize_text(std::string_view text);

/// Normalized, tokenized, stemmed phrase joined by single spaces.
std::string match_key(std::string_view phrase);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Scores the first min(k, |pred|) ranked predictions against the gold set.
/// Matching is set-based on match keys. Precision uses the number of
/// predictions taken as its denominator.
PRF f1_at_k(const labeling::KeyphrasePrediction& pred, std::span<const std::string> gold,
            std::size_t k);

struct GoldDocument {
  std::string id;
  std::vector<std::string> keywords;
};

struct DocumentScore {
  std::string id;
  std::map<std::size_t, PRF> at_k;
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, PRF> macro;
  std::vector<DocumentScore> documents;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Macro-averaged P/R/F1 for each k over documents with nonempty gold.
/// A gold document without a prediction scores zero; a prediction whose id
/// is not among the gold documents is a DataError.
EvalReport evaluate_corpus(const std::map<std::string, labeling::KeyphrasePrediction>& preds,
                           std::span<const GoldDocument> golds, std::span<const std::size_t> ks);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

struct AggregateReport {
  std::vector<std::size_t> ks;
  std::size_t runs = 0;
  std::map<std::size_t, MeanStd> precision;
  std::map<std::size_t, MeanStd> recall;
  std::map<std::size_t, MeanStd> f1;

  nlohmann::json to_json() const;
};

/// Sample mean and standard deviation (n - 1 denominator, 0 when n == 1).
MeanStd mean_std(std::span<const double> values);

AggregateReport aggregate_runs(std::span<const EvalReport> reports);

}  // namespace seke::evaluation
