// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seke/evaluation.hpp"
#include "seke/labeling.hpp"

namespace seke::data {

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> keywords;  // empty for prediction-only input

  bool operator==(const Document&) const = default;
};

/// One JSON object per line with "id", "text" and optional "keywords".
/// Blank lines are skipped. Malformed lines, invalid UTF-8, unknown fields and
/// duplicate ids raise DataError naming `source` and the line number.
std::vector<Document> parse_jsonl(std::istream& in, const std::string& source);
std::vector<Document> load_jsonl(const std::string& path);

void write_jsonl(std::ostream& out, std::span<const Document> docs);
void save_jsonl(const std::string& path, std::span<const Document> docs);

std::vector<evaluation::GoldDocument> gold_of(std::span<const Document> docs);

/// Prediction output: {"id", "keyphrases": [{"text", "score"}]} per line, in
/// rank order.
struct PredictionRecord {
  std::string id;
  labeling::KeyphrasePrediction prediction;
};

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
void save_predictions(const std::string& path, std::span<const PredictionRecord> records);
/// Same strictness as parse_jsonl. Ranks follow file order.
std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace seke::data
