// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seke/data.hpp"
#include "seke/labeling.hpp"
#include "seke/model.hpp"

namespace seke::analysis {

/// Per-document record of the top-weighted expert for every token.
struct ExpertTrace {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::size_t> experts;
  std::vector<labeling::BIO> labels;
  std::vector<std::vector<double>> weights;  // dense gate row per token
};

/// Clean inference (no noise, no dropout). Throws UnsupportedModel when the
/// model has no MoE layer.
std::vector<ExpertTrace> trace_experts(const model::KeyphraseModel& model,
                                       std::span<const data::Document> docs,
                                       std::size_t jobs = 1);

/// JSONL, one {"id", "tokens", "experts", "labels"} object per document.
void write_trace_jsonl(std::ostream& out, std::span<const ExpertTrace> traces);

/// Category name -> one value per token.
using Categories = std::map<std::string, std::vector<std::string>>;

/// Bundled stopword list (see core/data); `stopword_list_version()` names it.
const std::vector<std::string>& stopwords();
std::string_view stopword_list_version();
bool is_stopword(std::string_view lowered);

/// Words (case-folded surface), Punct and Stop ("true"/"false").
Categories builtin_categories(std::span<const std::string> surfaces);

/// One line of the annotation file: {"id", "tokens", "pos", "ne"}, plus any
/// further per-token string arrays (kept in `extra`, e.g. a synthetic "class").
struct AnnotatedDocument {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<std::string> ne;
  std::map<std::string, std::vector<std::string>> extra;
};

std::vector<AnnotatedDocument> parse_annotations(std::istream& in, const std::string& source);
std::vector<AnnotatedDocument> load_annotations(const std::string& path);
void write_annotations(std::ostream& out, std::span<const AnnotatedDocument> docs);

/// POS verbatim, NE, and binNE = (NE != "O").
Categories annotation_categories(const AnnotatedDocument& doc);

/// Annotations keyed by id, verified against the tokenizer output of `docs`.
/// A count or surface mismatch raises DataError naming the document and position.
std::map<std::string, const AnnotatedDocument*> align_annotations(
    std::span<const AnnotatedDocument> annotations, std::span<const data::Document> docs);

/// Rows are experts, columns category values; both in ascending order and
/// limited to observed values, so no margin is zero.
struct ContingencyTable {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::size_t> row_labels;
  std::vector<std::string> col_labels;
  std::uint64_t n = 0;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
  /// Drops all-zero rows and columns.
  ContingencyTable pruned() const;
  ContingencyTable transposed() const;
  static ContingencyTable from_counts(std::vector<std::vector<std::uint64_t>> counts);
};

ContingencyTable build_contingency(std::span<const std::size_t> experts,
                                   std::span<const std::string> values);

double chi_squared(const ContingencyTable& t);
/// Plain Cramér's V. Throws UndefinedStatistic when fewer than two rows or
/// columns survive pruning.
double cramers_v(const ContingencyTable& t);
/// Bias-corrected Cramér's V (Bergsma 2013), clamped to [0, 1].
double cramers_v_corrected(const ContingencyTable& t);

struct CategoryRow {
  std::string category;
  std::optional<double> v;  // nullopt when undefined ("n/a")
  std::size_t n_values = 0;
  std::string note;
};

struct SpecializationReport {
  std::size_t n_tokens = 0;
  std::size_t n_experts = 0;
  std::vector<CategoryRow> rows;
  std::vector<std::string> notices;

  const CategoryRow* find(std::string_view category) const;
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Category rows in the order Words, Punct, Stop, POS, Labels, binNE, NE.
/// Without annotations the POS/binNE/NE rows are omitted with a notice.
/// Annotations are matched to traces by id; traces shorter than their
/// annotation (truncation) use its prefix.
SpecializationReport specialization_from_traces(
    std::span<const ExpertTrace> traces, std::size_t n_experts,
    const std::map<std::string, const AnnotatedDocument*>* annotations = nullptr);

SpecializationReport specialization_report(const model::KeyphraseModel& model,
                                           std::span<const data::Document> docs,
                                           std::span<const AnnotatedDocument> annotations = {},
                                           std::size_t jobs = 1);

}  // namespace seke::analysis
