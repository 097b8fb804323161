// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Porter stemmer, original 1980 rule set (no length guard, ABLI -> ABLE,
// no LOGI rule).

#include <string>
#include <string_view>

#include "seke/evaluation.hpp"

namespace seke::evaluation {

namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string_view word) : w_(word) {}

  std::string run() {
    if (w_.empty()) return w_;
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return w_;
  }

 private:
  // Letter i of `s` is a consonant: not a vowel, and 'y' only when it
  // follows a vowel or starts the word.
  static bool consonant(std::string_view s, std::size_t i) {
    switch (s[i]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 || !consonant(s, i - 1);
      default:
        return true;
    }
  }

  // m in [C](VC)^m[V].
  static int measure(std::string_view s) {
    int m = 0;
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n && consonant(s, i)) ++i;
    while (i < n) {
      while (i < n && !consonant(s, i)) ++i;
      if (i >= n) break;
      while (i < n && consonant(s, i)) ++i;
      ++m;
    }
    return m;
  }

  static bool has_vowel(std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!consonant(s, i)) return true;
    }
    return false;
  }

  // *d
  static bool double_consonant(std::string_view s) {
    const std::size_t n = s.size();
    return n >= 2 && s[n - 1] == s[n - 2] && consonant(s, n - 1);
  }

  // *o: ends cvc, final c not w, x or y.
  static bool cvc(std::string_view s) {
    const std::size_t n = s.size();
    if (n < 3) return false;
    if (!consonant(s, n - 1) || consonant(s, n - 2) || !consonant(s, n - 3)) return false;
    const char last = s[n - 1];
    return last != 'w' && last != 'x' && last != 'y';
  }

  bool ends(std::string_view suffix) const { return std::string_view(w_).ends_with(suffix); }
  std::string_view stem_before(std::string_view suffix) const {
    return std::string_view(w_).substr(0, w_.size() - suffix.size());
  }
  void replace(std::string_view suffix, std::string_view with) {
    w_.resize(w_.size() - suffix.size());
    w_.append(with);
  }

  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };

  // Applies the longest matching rule if the remaining stem has m > min_m.
  // Rules are listed so that the first match is also the longest.
  template <std::size_t N>
  void apply_measure_rules(const Rule (&rules)[N], int min_m) {
    for (const Rule& r : rules) {
      if (!ends(r.suffix)) continue;
      if (measure(stem_before(r.suffix)) > min_m) replace(r.suffix, r.replacement);
      return;
    }
  }

  void step1a() {
    if (ends("sses")) {
      replace("sses", "ss");
    } else if (ends("ies")) {
      replace("ies", "i");
    } else if (ends("ss")) {
      // unchanged
    } else if (ends("s")) {
      replace("s", "");
    }
  }

  void step1b() {
    if (ends("eed")) {
      if (measure(stem_before("eed")) > 0) replace("eed", "ee");
      return;
    }
    std::string_view removed;
    if (ends("ed") && has_vowel(stem_before("ed"))) {
      removed = "ed";
    } else if (ends("ing") && has_vowel(stem_before("ing"))) {
      removed = "ing";
    } else {
      return;
    }
    replace(removed, "");
    if (ends("at")) {
      replace("at", "ate");
    } else if (ends("bl")) {
      replace("bl", "ble");
    } else if (ends("iz")) {
      replace("iz", "ize");
    } else if (double_consonant(w_)) {
      const char last = w_.back();
      if (last != 'l' && last != 's' && last != 'z') w_.pop_back();
    } else if (measure(w_) == 1 && cvc(w_)) {
      w_.push_back('e');
    }
  }

  void step1c() {
    if (ends("y") && has_vowel(stem_before("y"))) w_.back() = 'i';
  }

  void step2() {
    static constexpr Rule kRules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
    };
    apply_measure_rules(kRules, 0);
  }

  void step3() {
    static constexpr Rule kRules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    apply_measure_rules(kRules, 0);
  }

  void step4() {
    static constexpr std::string_view kSuffixes[] = {
        "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
        "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
    };
    for (std::string_view suffix : kSuffixes) {
      if (!ends(suffix)) continue;
      std::string_view stem = stem_before(suffix);
      bool ok = measure(stem) > 1;
      if (suffix == "ion") ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
      if (ok) replace(suffix, "");
      return;
    }
  }

  void step5a() {
    if (!ends("e")) return;
    std::string_view stem = stem_before("e");
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !cvc(stem))) w_.pop_back();
  }

  void step5b() {
    if (measure(w_) > 1 && double_consonant(w_) && w_.back() == 'l') w_.pop_back();
  }

  std::string w_;
};

}  // namespace

std::string porter_stem(std::string_view word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return std::string(word);
  }
  return Stemmer(word).run();
}

}  // namespace seke::evaluation
