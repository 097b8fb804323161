// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/synthetic.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "seke/errors.hpp"
#include "seke/nn/rng.hpp"

namespace seke::synthetic {

namespace {

constexpr std::size_t kMinWords = 30;
constexpr std::size_t kMaxWords = 80;
constexpr double kPunctRate = 0.06;

// Two-syllable pseudo-words from `consonants` x vowels, picked with a fixed
// stride so the list is independent of any seed.
std::vector<std::string> pseudo_words(std::string_view consonants, std::size_t count,
                                      std::size_t stride) {
  static constexpr std::string_view kVowels = "aeiou";
  std::vector<std::string> syllables;
  for (char c : consonants) {
    for (char v : kVowels) syllables.push_back(std::string{c, v});
  }
  const std::size_t total = syllables.size() * syllables.size();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = (i * stride) % total;
    out.push_back(syllables[idx / syllables.size()] + syllables[idx % syllables.size()]);
  }
  return out;
}

struct Builder {
  analysis::AnnotatedDocument ann;
  std::vector<std::string> gold;

  void add(const std::string& token, const char* cls, const char* pos, const char* ne) {
    ann.tokens.push_back(token);
    ann.extra["class"].emplace_back(cls);
    ann.pos.emplace_back(pos);
    ann.ne.emplace_back(ne);
  }
  void add_phrase(const std::vector<std::string>& words) {
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    if (std::find(gold.begin(), gold.end(), text) == gold.end()) gold.push_back(text);
  }
  void maybe_punct(nn::RngStream& rng) {
    if (rng.bernoulli(kPunctRate)) add(rng.bernoulli(0.5) ? "," : ".", "punct", "PUNCT", "O");
  }
  data::Document finish(std::string id) {
    ann.id = id;
    data::Document d{std::move(id), "", gold};
    for (const auto& t : ann.tokens) d.text += (d.text.empty() ? "" : " ") + t;
    return d;
  }
};

template <typename T>
const T& pick(const std::vector<T>& v, nn::RngStream& rng) {
  return v[rng.below(v.size())];
}

void marker_document(Builder& b, nn::RngStream& rng) {
  const auto& kw = keyword_vocabulary();
  const auto& filler = filler_vocabulary();
  const std::size_t length = kMinWords + rng.below(kMaxWords - kMinWords + 1);
  const std::size_t n_phrases = 2 + rng.below(3);
  std::vector<std::vector<std::size_t>> phrases(n_phrases);
  std::size_t kw_tokens = 0;
  for (auto& p : phrases) {
    const std::size_t len = 1 + rng.below(3);
    while (p.size() < len) {
      const std::size_t w = rng.below(kw.size());
      if (std::find(p.begin(), p.end(), w) == p.end()) p.push_back(w);
    }
    kw_tokens += len;
  }
  // Filler gaps around the phrases; inner gaps need at least one word.
  std::vector<std::size_t> gaps(n_phrases + 1, 0);
  for (std::size_t g = 1; g < n_phrases; ++g) gaps[g] = 1;
  for (std::size_t rest = length - kw_tokens - (n_phrases - 1); rest > 0; --rest) {
    ++gaps[rng.below(gaps.size())];
  }
  for (std::size_t g = 0; g <= n_phrases; ++g) {
    for (std::size_t i = 0; i < gaps[g]; ++i) {
      b.add(pick(filler, rng), "filler", "VERB", "O");
      b.maybe_punct(rng);
    }
    if (g == n_phrases) break;
    std::vector<std::string> words;
    for (std::size_t w : phrases[g]) {
      words.push_back(kw[w]);
      b.add(kw[w], "kw", "NOUN", w % 4 == 0 ? "ORG" : "O");
    }
    b.add_phrase(words);
  }
}

void vocabsplit_document(Builder& b, nn::RngStream& rng) {
  const auto& a_words = split_vocabulary('A');
  const auto& b_words = split_vocabulary('B');
  const std::size_t length = kMinWords + rng.below(kMaxWords - kMinWords + 1);
  std::size_t used = 0;
  while (used < length) {
    const std::size_t b_run = std::min(1 + rng.below(4), length - used);
    for (std::size_t i = 0; i < b_run; ++i) {
      b.add(pick(b_words, rng), "B", "ADP", "O");
    }
    used += b_run;
    if (used >= length) break;
    const std::size_t a_run = std::min(1 + rng.below(3), length - used);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < a_run; ++i) {
      const std::size_t w = rng.below(a_words.size());
      words.push_back(a_words[w]);
      b.add(a_words[w], "A", "NOUN", w % 5 == 0 ? "ORG" : "O");
    }
    b.add_phrase(words);
    used += a_run;
  }
}

}  // namespace

Rule parse_rule(std::string_view name) {
  if (name == "marker") return Rule::kMarker;
  if (name == "vocabsplit") return Rule::kVocabSplit;
  throw ConfigError("unknown synthetic rule \"" + std::string(name) +
                    "\" (expected marker or vocabsplit)");
}

std::string_view to_string(Rule rule) { return rule == Rule::kMarker ? "marker" : "vocabsplit"; }

const std::vector<std::string>& keyword_vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    for (const char* g : {"alpha", "beta",   "gamma",   "delta", "epsilon", "zeta",
                          "eta",   "theta",  "iota",    "kappa", "lambda",  "mu",
                          "nu",    "xi",     "omicron", "pi",    "rho",     "sigma",
                          "tau",   "upsilon", "phi",    "chi",   "psi",     "omega"}) {
      out.push_back(std::string("kw") + g);
    }
    return out;
  }();
  return words;
}

const std::vector<std::string>& filler_vocabulary() {
  static const std::vector<std::string> words = pseudo_words("bdfglmnprstvz", 300, 97);
  return words;
}

const std::vector<std::string>& split_vocabulary(char which) {
  static const std::vector<std::string> a = pseudo_words("bdfg", 150, 7);
  static const std::vector<std::string> b = pseudo_words("lmnp", 150, 7);
  if (which == 'A') return a;
  if (which == 'B') return b;
  throw ConfigError("split vocabulary must be A or B");
}

Corpus generate(std::size_t n_docs, std::uint64_t seed, Rule rule) {
  if (n_docs < 1) throw ConfigError("gen-synthetic: need at least one document");
  nn::RngStream rng(seed, std::string("synthetic-") + std::string(to_string(rule)));
  Corpus c;
  for (std::size_t i = 0; i < n_docs; ++i) {
    Builder b;
    if (rule == Rule::kMarker) {
      marker_document(b, rng);
    } else {
      vocabsplit_document(b, rng);
    }
    c.docs.push_back(b.finish(fmt::format("{}-{:05d}", to_string(rule), i)));
    c.annotations.push_back(std::move(b.ann));
  }
  return c;
}

}  // namespace seke::synthetic
