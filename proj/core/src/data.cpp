// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/data.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "seke/errors.hpp"

namespace seke::data {

std::vector<Document> parse_jsonl(std::istream& in, const std::string& source) {
  std::vector<Document> docs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": expected a JSON object");
    Document d;
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "id") {
          d.id = value.get<std::string>();
        } else if (key == "text") {
          d.text = value.get<std::string>();
        } else if (key == "keywords") {
          d.keywords = value.get<std::vector<std::string>>();
        } else {
          throw DataError(where + ": unknown field \"" + key + "\"");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("text")) {
      throw DataError(where + ": \"id\" and \"text\" are required");
    }
    if (!ids.insert(d.id).second) throw DataError(where + ": duplicate id \"" + d.id + "\"");
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<Document> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return parse_jsonl(in, path);
}

void write_jsonl(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) {
    out << nlohmann::json{{"id", d.id}, {"text", d.text}, {"keywords", d.keywords}}.dump()
        << '\n';
  }
}

void save_jsonl(const std::string& path, std::span<const Document> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_jsonl(out, docs);
}

std::vector<evaluation::GoldDocument> gold_of(std::span<const Document> docs) {
  std::vector<evaluation::GoldDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.id, d.keywords});
  return out;
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json phrases = nlohmann::ordered_json::array();
    for (const auto& p : r.prediction.phrases) {
      phrases.push_back({{"text", p.text}, {"score", p.score}});
    }
    out << nlohmann::ordered_json{{"id", r.id}, {"keyphrases", std::move(phrases)}}.dump()
        << '\n';
  }
}

void save_predictions(const std::string& path, std::span<const PredictionRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_predictions(out, records);
}

std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source) {
  std::vector<PredictionRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    PredictionRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw DataError(where + ": expected a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (key != "id" && key != "keyphrases") {
          throw DataError(where + ": unknown field \"" + key + "\"");
        }
      }
      if (!j.contains("id") || !j.contains("keyphrases")) {
        throw DataError(where + ": \"id\" and \"keyphrases\" are required");
      }
      r.id = j.at("id").get<std::string>();
      for (const auto& p : j.at("keyphrases")) {
        if (!p.is_object() || p.size() != 2 || !p.contains("text") || !p.contains("score")) {
          throw DataError(where + ": keyphrases hold {\"text\", \"score\"} objects");
        }
        labeling::KeyphrasePrediction::Phrase phrase;
        phrase.text = p.at("text").get<std::string>();
        phrase.score = p.at("score").get<double>();
        phrase.first_token_index = r.prediction.phrases.size();
        r.prediction.phrases.push_back(std::move(phrase));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!ids.insert(r.id).second) throw DataError(where + ": duplicate id \"" + r.id + "\"");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return parse_predictions(in, path);
}

}  // namespace seke::data
