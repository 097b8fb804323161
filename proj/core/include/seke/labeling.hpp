// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seke::labeling {

struct Token {
  std::string surface;
  std::size_t char_start = 0;  // byte offset, inclusive
  std::size_t char_end = 0;    // byte offset, exclusive
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

/// Class ids are fixed: O=0, B=1, I=2.
enum class BIO : int { kO = 0, kB = 1, kI = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::size_t kMaxKeyphrases = 10;

char to_char(BIO label);
BIO bio_from_char(char c);

struct LabeledSequence {
  std::vector<Token> tokens;
  std::vector<BIO> labels;
  std::vector<std::array<double, kNumClasses>> probs;  // empty when unscored
};

struct RawPhrase {
  std::string text;
  double score = 1.0;
  std::size_t first_token_index = 0;
  std::vector<std::string> tokens;
};

struct KeyphrasePrediction {
  struct Phrase {
    std::string text;
    double score = 0.0;
    std::size_t first_token_index = 0;
  };
  std::vector<Phrase> phrases;

  std::vector<std::string> texts() const;
};

/// Word tokens are maximal runs of letters, digits, dashes and apostrophes.
/// Any other non-whitespace code point is a one-character punctuation token.
std::vector<Token> tokenize(std::string_view text);

/// True for single-code-point tokens that the tokenizer emits as punctuation.
bool is_punctuation_token(std::string_view surface);
bool is_dash_or_apostrophe(std::string_view surface);

/// Case-insensitive exact token match of each gold phrase. Overlaps resolve
/// to the earliest start, then the longest match. Gold phrases absent from
/// the text label nothing.
std::vector<BIO> annotate_bio(std::span<const Token> tokens, std::span<const std::string> gold);

/// Maximal B I* runs become phrases; an orphan I opens a new phrase. Score is
/// the mean probability of each token's predicted label (1 when unscored).
std::vector<RawPhrase> decode_keyphrases(const LabeledSequence& seq);

/// Drops phrases containing punctuation other than dashes and apostrophes,
/// deduplicates on the normalized (lowercased, stemmed) form keeping the best
/// score, ranks by score then position, and keeps at most 10.
KeyphrasePrediction postprocess(std::vector<RawPhrase> raw);

}  // namespace seke::labeling
