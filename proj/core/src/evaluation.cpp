// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/evaluation.hpp"

#include <fmt/format.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "seke/errors.hpp"

namespace seke::evaluation {

std::string normalize_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString input =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(input, status);
  if (U_FAILURE(status)) throw DataError("text normalization failed");
  icu::UnicodeString folded;
  for (int32_t i = 0; i < normalized.length();) {
    const UChar32 c = normalized.char32At(i);
    folded.append(static_cast<UChar32>(u_foldCase(c, U_FOLD_CASE_DEFAULT)));
    i += U16_LENGTH(c);
  }
  std::string out;
  folded.toUTF8String(out);
  return out;
}

std::string match_key(std::string_view phrase) {
  std::string key;
  for (const auto& token : labeling::tokenize(normalize_text(phrase))) {
    if (!key.empty()) key.push_back(' ');
    key += porter_stem(token.surface);
  }
  return key;
}

namespace {

std::set<std::string> gold_keys(std::span<const std::string> gold) {
  std::set<std::string> keys;
  for (const auto& g : gold) {
    std::string k = match_key(g);
    if (!k.empty()) keys.insert(std::move(k));
  }
  return keys;
}

PRF score(const labeling::KeyphrasePrediction& pred, const std::set<std::string>& gold,
          std::size_t k) {
  const std::size_t taken = std::min(k, pred.phrases.size());
  std::set<std::string> predicted;
  for (std::size_t i = 0; i < taken; ++i) predicted.insert(match_key(pred.phrases[i].text));
  std::size_t matched = 0;
  for (const auto& key : predicted) matched += gold.count(key);
  PRF out;
  if (taken > 0) out.precision = static_cast<double>(matched) / static_cast<double>(taken);
  if (!gold.empty()) out.recall = static_cast<double>(matched) / static_cast<double>(gold.size());
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

}  // namespace

PRF f1_at_k(const labeling::KeyphrasePrediction& pred, std::span<const std::string> gold,
            std::size_t k) {
  if (k < 1) throw ConfigError("f1_at_k: k must be at least 1");
  return score(pred, gold_keys(gold), k);
}

EvalReport evaluate_corpus(const std::map<std::string, labeling::KeyphrasePrediction>& preds,
                           std::span<const GoldDocument> golds, std::span<const std::size_t> ks) {
  if (ks.empty()) throw ConfigError("evaluate_corpus: no k values");
  for (std::size_t k : ks) {
    if (k < 1) throw ConfigError("evaluate_corpus: k must be at least 1");
  }
  std::set<std::string> gold_ids;
  for (const auto& g : golds) gold_ids.insert(g.id);
  for (const auto& [id, _] : preds) {
    if (!gold_ids.contains(id)) throw DataError("evaluate_corpus: prediction for unknown id " + id);
  }

  EvalReport report;
  report.ks.assign(ks.begin(), ks.end());
  for (std::size_t k : ks) report.macro[k] = PRF{};
  const labeling::KeyphrasePrediction empty;
  for (const auto& g : golds) {
    const auto keys = gold_keys(g.keywords);
    if (keys.empty()) continue;
    auto it = preds.find(g.id);
    const auto& pred = it == preds.end() ? empty : it->second;
    DocumentScore row{g.id, {}};
    for (std::size_t k : ks) {
      row.at_k[k] = score(pred, keys, k);
      report.macro[k].precision += row.at_k[k].precision;
      report.macro[k].recall += row.at_k[k].recall;
      report.macro[k].f1 += row.at_k[k].f1;
    }
    report.documents.push_back(std::move(row));
  }
  if (!report.documents.empty()) {
    const double n = static_cast<double>(report.documents.size());
    for (auto& [_, m] : report.macro) {
      m.precision /= n;
      m.recall /= n;
      m.f1 /= n;
    }
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["ks"] = ks;
  j["num_documents"] = documents.size();
  for (const auto& [k, m] : macro) {
    j["macro"][std::to_string(k)] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : documents) {
    nlohmann::json row{{"id", d.id}};
    for (const auto& [k, m] : d.at_k) {
      row[std::to_string(k)] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    docs.push_back(std::move(row));
  }
  j["documents"] = std::move(docs);
  return j;
}

std::string EvalReport::to_table() const {
  std::string out = fmt::format("{:<8}{:>12}{:>12}{:>12}\n", "k", "P", "R", "F1");
  for (const auto& [k, m] : macro) {
    out += fmt::format("{:<8}{:>12.4f}{:>12.4f}{:>12.4f}\n", fmt::format("@{}", k), m.precision,
                       m.recall, m.f1);
  }
  out += fmt::format("documents: {}\n", documents.size());
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  // Welford: identical inputs keep the running mean exact and the spread 0.
  MeanStd out;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double delta = v - out.mean;
    out.mean += delta / static_cast<double>(n);
    m2 += delta * (v - out.mean);
  }
  if (n > 1) out.stddev = std::sqrt(m2 / static_cast<double>(n - 1));
  return out;
}

AggregateReport aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("aggregate_runs: no reports");
  AggregateReport out;
  out.ks = reports.front().ks;
  out.runs = reports.size();
  for (std::size_t k : out.ks) {
    std::vector<double> p, r, f;
    for (const auto& rep : reports) {
      auto it = rep.macro.find(k);
      if (it == rep.macro.end()) throw ConfigError("aggregate_runs: reports disagree on k values");
      p.push_back(it->second.precision);
      r.push_back(it->second.recall);
      f.push_back(it->second.f1);
    }
    out.precision[k] = mean_std(p);
    out.recall[k] = mean_std(r);
    out.f1[k] = mean_std(f);
  }
  return out;
}

nlohmann::json AggregateReport::to_json() const {
  nlohmann::json j;
  j["ks"] = ks;
  j["runs"] = runs;
  for (std::size_t k : ks) {
    auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.stddev}}; };
    j["metrics"][std::to_string(k)] = {{"precision", ms(precision.at(k))},
                                       {"recall", ms(recall.at(k))},
                                       {"f1", ms(f1.at(k))}};
  }
  return j;
}

}  // namespace seke::evaluation
