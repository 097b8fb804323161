// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "seke/errors.hpp"
#include "seke/evaluation.hpp"
#include "seke/training.hpp"

namespace seke::analysis {

namespace detail {
extern const char* const kStopwordsText;
extern const char* const kStopwordsVersion;
}  // namespace detail

namespace {

const char* flag(bool b) { return b ? "true" : "false"; }

const std::set<std::string, std::less<>>& stopword_set() {
  static const std::set<std::string, std::less<>> set(stopwords().begin(), stopwords().end());
  return set;
}

}  // namespace

// --- tracing ----------------------------------------------------------------

std::vector<ExpertTrace> trace_experts(const model::KeyphraseModel& model,
                                       std::span<const data::Document> docs, std::size_t jobs) {
  if (!model.config().head.use_moe) {
    throw UnsupportedModel("expert tracing needs a model with an MoE layer");
  }
  const std::size_t n_experts = model.config().head.moe.n_experts;
  const auto preds = training::predict(model, docs, jobs, true);
  std::vector<ExpertTrace> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    ExpertTrace t;
    t.id = p.id;
    for (std::size_t i = 0; i < p.sequence.tokens.size(); ++i) {
      const moe::GateDecision& d = p.decisions.at(i);
      t.tokens.push_back(p.sequence.tokens[i].surface);
      t.experts.push_back(d.top_expert());
      t.labels.push_back(p.sequence.labels[i]);
      std::vector<double> dense(n_experts, 0.0);
      for (std::size_t j = 0; j < d.indices.size(); ++j) dense[d.indices[j]] = d.weights[j];
      t.weights.push_back(std::move(dense));
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_trace_jsonl(std::ostream& out, std::span<const ExpertTrace> traces) {
  for (const auto& t : traces) {
    std::vector<std::string> labels;
    for (labeling::BIO b : t.labels) labels.emplace_back(1, labeling::to_char(b));
    out << nlohmann::json{{"id", t.id}, {"tokens", t.tokens}, {"experts", t.experts},
                          {"labels", labels}}
               .dump()
        << '\n';
  }
}

// --- categories -------------------------------------------------------------

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w;
    std::istringstream in(detail::kStopwordsText);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      w.push_back(line);
    }
    return w;
  }();
  return words;
}

std::string_view stopword_list_version() { return detail::kStopwordsVersion; }

bool is_stopword(std::string_view lowered) { return stopword_set().contains(lowered); }

Categories builtin_categories(std::span<const std::string> surfaces) {
  Categories c;
  auto& words = c["Words"];
  auto& punct = c["Punct"];
  auto& stop = c["Stop"];
  for (const auto& s : surfaces) {
    std::string lowered = evaluation::normalize_text(s);
    punct.emplace_back(flag(labeling::is_punctuation_token(s)));
    stop.emplace_back(flag(is_stopword(lowered)));
    words.push_back(std::move(lowered));
  }
  return c;
}

std::vector<AnnotatedDocument> parse_annotations(std::istream& in, const std::string& source) {
  std::vector<AnnotatedDocument> docs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    AnnotatedDocument d;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (!j.is_object()) throw DataError(where + ": expected a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (key == "id") {
          d.id = value.get<std::string>();
        } else if (key == "tokens") {
          d.tokens = value.get<std::vector<std::string>>();
        } else if (key == "pos") {
          d.pos = value.get<std::vector<std::string>>();
        } else if (key == "ne") {
          d.ne = value.get<std::vector<std::string>>();
        } else {
          d.extra[key] = value.get<std::vector<std::string>>();
        }
      }
      if (!j.contains("id") || !j.contains("tokens") || !j.contains("pos") || !j.contains("ne")) {
        throw DataError(where + ": \"id\", \"tokens\", \"pos\" and \"ne\" are required");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    auto check = [&](const std::string& name, std::size_t size) {
      if (size != d.tokens.size()) {
        throw DataError(fmt::format("{}: document {}: \"{}\" has {} values for {} tokens", where,
                                    d.id, name, size, d.tokens.size()));
      }
    };
    check("pos", d.pos.size());
    check("ne", d.ne.size());
    for (const auto& [name, values] : d.extra) check(name, values.size());
    if (!ids.insert(d.id).second) throw DataError(where + ": duplicate id \"" + d.id + "\"");
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<AnnotatedDocument> load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return parse_annotations(in, path);
}

void write_annotations(std::ostream& out, std::span<const AnnotatedDocument> docs) {
  for (const auto& d : docs) {
    nlohmann::json j = {{"id", d.id}, {"tokens", d.tokens}, {"pos", d.pos}, {"ne", d.ne}};
    for (const auto& [name, values] : d.extra) j[name] = values;
    out << j.dump() << '\n';
  }
}

Categories annotation_categories(const AnnotatedDocument& doc) {
  Categories c;
  c["POS"] = doc.pos;
  c["NE"] = doc.ne;
  auto& bin = c["binNE"];
  for (const auto& ne : doc.ne) bin.emplace_back(flag(ne != "O"));
  return c;
}

std::map<std::string, const AnnotatedDocument*> align_annotations(
    std::span<const AnnotatedDocument> annotations, std::span<const data::Document> docs) {
  std::map<std::string, const AnnotatedDocument*> by_id;
  for (const auto& a : annotations) by_id.emplace(a.id, &a);
  std::map<std::string, const AnnotatedDocument*> out;
  for (const auto& d : docs) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw DataError("annotations: no entry for document " + d.id);
    const AnnotatedDocument& a = *it->second;
    const auto tokens = labeling::tokenize(d.text);
    const std::size_t common = std::min(tokens.size(), a.tokens.size());
    for (std::size_t i = 0; i < common; ++i) {
      if (tokens[i].surface != a.tokens[i]) {
        throw DataError(fmt::format(
            "annotations: document {} position {}: annotation token \"{}\" vs text token \"{}\"",
            d.id, i, a.tokens[i], tokens[i].surface));
      }
    }
    if (tokens.size() != a.tokens.size()) {
      throw DataError(fmt::format(
          "annotations: document {} has {} annotated tokens but {} text tokens (first "
          "unmatched position {})",
          d.id, a.tokens.size(), tokens.size(), common));
    }
    out.emplace(d.id, &a);
  }
  return out;
}

// --- contingency and Cramér's V ---------------------------------------------

ContingencyTable ContingencyTable::from_counts(std::vector<std::vector<std::uint64_t>> counts) {
  ContingencyTable t;
  const std::size_t c = counts.empty() ? 0 : counts[0].size();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != c) throw DimensionError("contingency table rows differ in length");
    t.row_labels.push_back(i);
    for (std::uint64_t v : counts[i]) t.n += v;
  }
  for (std::size_t j = 0; j < c; ++j) t.col_labels.push_back(std::to_string(j));
  t.counts = std::move(counts);
  return t;
}

ContingencyTable ContingencyTable::pruned() const {
  std::vector<std::uint64_t> row_sum(rows(), 0), col_sum(cols(), 0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      row_sum[i] += counts[i][j];
      col_sum[j] += counts[i][j];
    }
  }
  ContingencyTable t;
  t.n = n;
  for (std::size_t j = 0; j < cols(); ++j) {
    if (col_sum[j] > 0) t.col_labels.push_back(col_labels[j]);
  }
  for (std::size_t i = 0; i < rows(); ++i) {
    if (row_sum[i] == 0) continue;
    t.row_labels.push_back(row_labels[i]);
    std::vector<std::uint64_t> row;
    for (std::size_t j = 0; j < cols(); ++j) {
      if (col_sum[j] > 0) row.push_back(counts[i][j]);
    }
    t.counts.push_back(std::move(row));
  }
  return t;
}

ContingencyTable ContingencyTable::transposed() const {
  ContingencyTable t;
  t.n = n;
  t.counts.assign(cols(), std::vector<std::uint64_t>(rows(), 0));
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) t.counts[j][i] = counts[i][j];
  }
  for (std::size_t j = 0; j < cols(); ++j) t.row_labels.push_back(j);
  for (std::size_t label : row_labels) t.col_labels.push_back(std::to_string(label));
  return t;
}

ContingencyTable build_contingency(std::span<const std::size_t> experts,
                                   std::span<const std::string> values) {
  if (experts.size() != values.size()) {
    throw DimensionError(fmt::format("build_contingency: {} experts vs {} category values",
                                     experts.size(), values.size()));
  }
  if (experts.empty()) throw DataError("build_contingency: empty input");
  ContingencyTable t;
  t.row_labels.assign(experts.begin(), experts.end());
  std::sort(t.row_labels.begin(), t.row_labels.end());
  t.row_labels.erase(std::unique(t.row_labels.begin(), t.row_labels.end()), t.row_labels.end());
  t.col_labels.assign(values.begin(), values.end());
  std::sort(t.col_labels.begin(), t.col_labels.end());
  t.col_labels.erase(std::unique(t.col_labels.begin(), t.col_labels.end()), t.col_labels.end());
  t.counts.assign(t.row_labels.size(), std::vector<std::uint64_t>(t.col_labels.size(), 0));
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const auto r = std::lower_bound(t.row_labels.begin(), t.row_labels.end(), experts[i]) -
                   t.row_labels.begin();
    const auto c = std::lower_bound(t.col_labels.begin(), t.col_labels.end(), values[i]) -
                   t.col_labels.begin();
    ++t.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  t.n = experts.size();
  return t;
}

namespace {

struct Prepared {
  ContingencyTable t;
  double r = 0, c = 0, n = 0;
};

Prepared prepare(const ContingencyTable& table) {
  Prepared p{table.pruned(), 0, 0, 0};
  if (p.t.rows() < 2 || p.t.cols() < 2) {
    throw UndefinedStatistic(fmt::format(
        "Cramér's V undefined for a {}x{} table after pruning", p.t.rows(), p.t.cols()));
  }
  if (p.t.n < 2) throw UndefinedStatistic("Cramér's V needs at least two observations");
  p.r = static_cast<double>(p.t.rows());
  p.c = static_cast<double>(p.t.cols());
  p.n = static_cast<double>(p.t.n);
  return p;
}

}  // namespace

double chi_squared(const ContingencyTable& table) {
  const ContingencyTable t = table.pruned();
  std::vector<double> row_sum(t.rows(), 0.0), col_sum(t.cols(), 0.0);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      row_sum[i] += static_cast<double>(t.counts[i][j]);
      col_sum[j] += static_cast<double>(t.counts[i][j]);
    }
  }
  const double n = static_cast<double>(t.n);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const double expected = row_sum[i] * col_sum[j] / n;
      const double diff = static_cast<double>(t.counts[i][j]) - expected;
      chi2 += diff * diff / expected;
    }
  }
  return chi2;
}

double cramers_v(const ContingencyTable& table) {
  const Prepared p = prepare(table);
  const double phi2 = chi_squared(p.t) / p.n;
  return std::clamp(std::sqrt(phi2 / std::min(p.r - 1.0, p.c - 1.0)), 0.0, 1.0);
}

double cramers_v_corrected(const ContingencyTable& table) {
  const Prepared p = prepare(table);
  const double phi2 = chi_squared(p.t) / p.n;
  const double phi2_tilde = std::max(0.0, phi2 - (p.r - 1.0) * (p.c - 1.0) / (p.n - 1.0));
  const double r_tilde = p.r - (p.r - 1.0) * (p.r - 1.0) / (p.n - 1.0);
  const double c_tilde = p.c - (p.c - 1.0) * (p.c - 1.0) / (p.n - 1.0);
  const double denom = std::min(r_tilde - 1.0, c_tilde - 1.0);
  if (!(denom > 0.0)) {
    throw UndefinedStatistic("corrected Cramér's V undefined: too few observations per level");
  }
  return std::clamp(std::sqrt(phi2_tilde / denom), 0.0, 1.0);
}

// --- report -----------------------------------------------------------------

const CategoryRow* SpecializationReport::find(std::string_view category) const {
  for (const auto& r : rows) {
    if (r.category == category) return &r;
  }
  return nullptr;
}

nlohmann::json SpecializationReport::to_json() const {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"category", r.category}, {"values", r.n_values}};
    row["cramers_v"] = r.v ? nlohmann::json(*r.v) : nlohmann::json("n/a");
    if (!r.note.empty()) row["note"] = r.note;
    cats.push_back(std::move(row));
  }
  return {{"tokens", n_tokens},
          {"experts", n_experts},
          {"stopword_list", stopword_list_version()},
          {"categories", cats},
          {"notices", notices}};
}

std::string SpecializationReport::to_table() const {
  std::string out = fmt::format("{:<10} {:>8} {:>8}\n", "Category", "V~", "values");
  for (const auto& r : rows) {
    const std::string v = r.v ? fmt::format("{:.4f}", *r.v) : "n/a";
    out += fmt::format("{:<10} {:>8} {:>8}\n", r.category, v, r.n_values);
  }
  out += fmt::format("({} tokens, {} experts)\n", n_tokens, n_experts);
  for (const auto& n : notices) out += "note: " + n + "\n";
  return out;
}

SpecializationReport specialization_from_traces(
    std::span<const ExpertTrace> traces, std::size_t n_experts,
    const std::map<std::string, const AnnotatedDocument*>* annotations) {
  static const char* const kOrder[] = {"Words", "Punct", "Stop", "POS", "Labels", "binNE", "NE"};
  std::vector<std::size_t> experts;
  std::map<std::string, std::vector<std::string>> values;
  for (const auto& t : traces) {
    experts.insert(experts.end(), t.experts.begin(), t.experts.end());
    for (auto& [name, v] : builtin_categories(t.tokens)) {
      auto& dst = values[name];
      dst.insert(dst.end(), v.begin(), v.end());
    }
    auto& labels = values["Labels"];
    for (labeling::BIO b : t.labels) labels.emplace_back(1, labeling::to_char(b));
    if (annotations) {
      auto it = annotations->find(t.id);
      if (it == annotations->end()) throw DataError("annotations: no entry for document " + t.id);
      if (it->second->tokens.size() < t.tokens.size()) {
        throw DataError("annotations: document " + t.id + " has fewer tokens than its trace");
      }
      for (auto& [name, v] : annotation_categories(*it->second)) {
        auto& dst = values[name];
        dst.insert(dst.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(t.tokens.size()));
      }
    }
  }

  SpecializationReport report;
  report.n_tokens = experts.size();
  report.n_experts = n_experts;
  if (!annotations) {
    report.notices.push_back("no annotation file: POS, binNE and NE rows omitted");
  }
  for (const char* name : kOrder) {
    auto it = values.find(name);
    if (it == values.end()) continue;
    CategoryRow row;
    row.category = name;
    if (experts.empty()) {
      row.note = "no tokens";
    } else {
      const ContingencyTable table = build_contingency(experts, it->second);
      row.n_values = table.cols();
      try {
        row.v = cramers_v_corrected(table);
      } catch (const UndefinedStatistic& e) {
        row.note = e.what();
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

SpecializationReport specialization_report(const model::KeyphraseModel& model,
                                           std::span<const data::Document> docs,
                                           std::span<const AnnotatedDocument> annotations,
                                           std::size_t jobs) {
  const auto traces = trace_experts(model, docs, jobs);
  if (annotations.empty()) {
    return specialization_from_traces(traces, model.config().head.moe.n_experts);
  }
  const auto aligned = align_annotations(annotations, docs);
  return specialization_from_traces(traces, model.config().head.moe.n_experts, &aligned);
}

}  // namespace seke::analysis
