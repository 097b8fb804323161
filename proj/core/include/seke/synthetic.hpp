// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "seke/analysis.hpp"
#include "seke/data.hpp"

namespace seke::synthetic {

/// marker:     filler text in which every maximal run of "kw"-prefixed tokens
///             (1 to 3 tokens, drawn from a fixed keyword vocabulary) is a
///             gold keyphrase.
/// vocabsplit: alternating runs from two disjoint vocabularies A and B; each
///             run of A words (1 to 3) is a gold keyphrase. The annotation
///             file records the class of every token.
enum class Rule { kMarker, kVocabSplit };

Rule parse_rule(std::string_view name);
std::string_view to_string(Rule rule);

struct Corpus {
  std::vector<data::Document> docs;
  /// Per token: "class" (kw/filler/punct, or A/B), a coarse "pos" and an "ne".
  std::vector<analysis::AnnotatedDocument> annotations;
};

/// Deterministic per (n_docs, seed, rule). Documents hold 30 to 80 words.
Corpus generate(std::size_t n_docs, std::uint64_t seed, Rule rule);

/// The fixed vocabularies, exposed for tests.
const std::vector<std::string>& keyword_vocabulary();
const std::vector<std::string>& filler_vocabulary();
const std::vector<std::string>& split_vocabulary(char which);  // 'A' or 'B'

}  // namespace seke::synthetic
