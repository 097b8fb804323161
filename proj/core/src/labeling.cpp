// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/labeling.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <map>

#include "seke/errors.hpp"
#include "seke/evaluation.hpp"

namespace seke::labeling {

namespace {

bool is_dash(UChar32 c) { return c == '-' || (c >= 0x2010 && c <= 0x2015); }
bool is_apostrophe(UChar32 c) { return c == '\'' || c == 0x2019 || c == 0x02BC; }

bool is_word_char(UChar32 c) {
  if (c < 0) return false;
  if (u_isalnum(c)) return true;
  // Combining marks stay attached so decomposed text tokenizes like composed.
  if (U_GET_GC_MASK(c) & U_GC_M_MASK) return true;
  return is_dash(c) || is_apostrophe(c);
}

// Decodes the single code point spanning all of `s`, or returns U_SENTINEL.
UChar32 single_code_point(std::string_view s) {
  if (s.empty()) return U_SENTINEL;
  int32_t i = 0;
  UChar32 c = 0;
  U8_NEXT(s.data(), i, static_cast<int32_t>(s.size()), c);
  return static_cast<std::size_t>(i) == s.size() ? c : U_SENTINEL;
}

}  // namespace

char to_char(BIO label) {
  switch (label) {
    case BIO::kO:
      return 'O';
    case BIO::kB:
      return 'B';
    case BIO::kI:
      return 'I';
  }
  return '?';
}

BIO bio_from_char(char c) {
  switch (c) {
    case 'O':
      return BIO::kO;
    case 'B':
      return BIO::kB;
    case 'I':
      return BIO::kI;
    default:
      throw DataError(std::string("invalid BIO label '") + c + "'");
  }
}

std::vector<std::string> KeyphrasePrediction::texts() const {
  std::vector<std::string> out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(p.text);
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  int32_t word_start = -1;
  auto close_word = [&](int32_t end) {
    if (word_start < 0) return;
    const auto b = static_cast<std::size_t>(word_start);
    const auto e = static_cast<std::size_t>(end);
    tokens.push_back({std::string(text.substr(b, e - b)), b, e, tokens.size()});
    word_start = -1;
  };
  while (i < n) {
    const int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(text.data(), i, n, c);
    if (is_word_char(c)) {
      if (word_start < 0) word_start = start;
      continue;
    }
    close_word(start);
    // Invalid byte sequences (c < 0) become one-unit punctuation tokens.
    if (c >= 0 && u_isUWhiteSpace(c)) continue;
    const auto b = static_cast<std::size_t>(start);
    const auto e = static_cast<std::size_t>(i);
    tokens.push_back({std::string(text.substr(b, e - b)), b, e, tokens.size()});
  }
  close_word(n);
  return tokens;
}

bool is_punctuation_token(std::string_view surface) {
  const UChar32 c = single_code_point(surface);
  if (c == U_SENTINEL) {
    // A lone invalid byte is emitted as punctuation by the tokenizer.
    return surface.size() == 1 && static_cast<unsigned char>(surface[0]) >= 0x80;
  }
  if (u_isUWhiteSpace(c) || u_isalnum(c) || (U_GET_GC_MASK(c) & U_GC_M_MASK)) return false;
  return true;
}

bool is_dash_or_apostrophe(std::string_view surface) {
  const UChar32 c = single_code_point(surface);
  return c != U_SENTINEL && (is_dash(c) || is_apostrophe(c));
}

std::vector<BIO> annotate_bio(std::span<const Token> tokens, std::span<const std::string> gold) {
  std::vector<std::string> doc;
  doc.reserve(tokens.size());
  for (const auto& t : tokens) doc.push_back(evaluation::normalize_text(t.surface));

  std::vector<std::vector<std::string>> phrases;
  for (const auto& g : gold) {
    std::vector<std::string> p;
    for (const auto& t : tokenize(g)) p.push_back(evaluation::normalize_text(t.surface));
    if (!p.empty()) phrases.push_back(std::move(p));
  }

  std::vector<BIO> labels(tokens.size(), BIO::kO);
  std::size_t i = 0;
  while (i < doc.size()) {
    std::size_t best = 0;
    for (const auto& p : phrases) {
      if (p.size() <= best || i + p.size() > doc.size()) continue;
      if (std::equal(p.begin(), p.end(), doc.begin() + static_cast<std::ptrdiff_t>(i))) {
        best = p.size();
      }
    }
    if (best == 0) {
      ++i;
      continue;
    }
    labels[i] = BIO::kB;
    for (std::size_t j = 1; j < best; ++j) labels[i + j] = BIO::kI;
    i += best;
  }
  return labels;
}

std::vector<RawPhrase> decode_keyphrases(const LabeledSequence& seq) {
  if (seq.labels.size() != seq.tokens.size()) {
    throw DimensionError("decode_keyphrases: label count does not match token count");
  }
  const bool scored = !seq.probs.empty();
  if (scored && seq.probs.size() != seq.tokens.size()) {
    throw DimensionError("decode_keyphrases: probability rows do not match token count");
  }

  std::vector<RawPhrase> out;
  bool open = false;
  double score_sum = 0.0;
  auto close = [&] {
    if (!open) return;
    RawPhrase& p = out.back();
    p.score = scored ? score_sum / static_cast<double>(p.tokens.size()) : 1.0;
    open = false;
  };
  for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
    const BIO label = seq.labels[t];
    if (label == BIO::kO) {
      close();
      continue;
    }
    if (label == BIO::kB || !open) {
      close();
      out.push_back(RawPhrase{"", 0.0, t, {}});
      open = true;
      score_sum = 0.0;
    }
    RawPhrase& p = out.back();
    if (!p.text.empty()) p.text.push_back(' ');
    p.text += seq.tokens[t].surface;
    p.tokens.push_back(seq.tokens[t].surface);
    if (scored) score_sum += seq.probs[t][static_cast<std::size_t>(label)];
  }
  close();
  return out;
}

KeyphrasePrediction postprocess(std::vector<RawPhrase> raw) {
  // Best occurrence per normalized form.
  std::map<std::string, RawPhrase> best;
  for (auto& p : raw) {
    if (p.tokens.empty()) {
      for (auto& t : tokenize(p.text)) p.tokens.push_back(std::move(t.surface));
    }
    if (p.tokens.empty()) continue;
    const bool disallowed = std::any_of(p.tokens.begin(), p.tokens.end(), [](const std::string& t) {
      return is_punctuation_token(t) && !is_dash_or_apostrophe(t);
    });
    if (disallowed) continue;
    std::string key = evaluation::match_key(p.text);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(std::move(key), std::move(p));
      continue;
    }
    const RawPhrase& held = it->second;
    if (p.score > held.score ||
        (p.score == held.score && p.first_token_index < held.first_token_index)) {
      it->second = std::move(p);
    }
  }

  std::vector<RawPhrase> kept;
  kept.reserve(best.size());
  for (auto& [_, p] : best) kept.push_back(std::move(p));
  std::sort(kept.begin(), kept.end(), [](const RawPhrase& a, const RawPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.first_token_index < b.first_token_index;
  });
  if (kept.size() > kMaxKeyphrases) kept.resize(kMaxKeyphrases);

  KeyphrasePrediction pred;
  for (auto& p : kept) pred.phrases.push_back({std::move(p.text), p.score, p.first_token_index});
  return pred;
}

}  // namespace seke::labeling
