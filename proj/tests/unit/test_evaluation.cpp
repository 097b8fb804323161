// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "metric_oracle.hpp"
#include "seke/errors.hpp"
#include "seke/evaluation.hpp"

namespace seke::evaluation {
namespace {

using labeling::KeyphrasePrediction;

KeyphrasePrediction pred_of(std::initializer_list<const char*> texts) {
  KeyphrasePrediction p;
  double score = 1.0;
  std::size_t pos = 0;
  for (const char* t : texts) {
    p.phrases.push_back({t, score, pos++});
    score -= 0.01;
  }
  return p;
}

TEST(Porter, Examples) {
  EXPECT_EQ(porter_stem("caresses"), "caress");
  EXPECT_EQ(porter_stem("ponies"), "poni");
  EXPECT_EQ(porter_stem("sky"), "sky");
  EXPECT_EQ(porter_stem("relational"), "relat");
  EXPECT_EQ(porter_stem("hopping"), "hop");
  EXPECT_EQ(porter_stem("generalizations"), "gener");
  EXPECT_EQ(porter_stem("x2y"), "x2y");
  EXPECT_EQ(porter_stem(""), "");
}

TEST(Porter, AgreesWithReferenceFixture) {
  std::ifstream in(std::string(SEKE_TEST_DATA_DIR) + "/porter_fixture.tsv");
  ASSERT_TRUE(in) << "fixture missing";
  std::string line;
  std::size_t pairs = 0, mismatches = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const std::string word = line.substr(0, tab);
    const std::string stem = line.substr(tab + 1);
    ++pairs;
    if (porter_stem(word) != stem) {
      ++mismatches;
      ADD_FAILURE() << word << ": expected " << stem << ", got " << porter_stem(word);
      if (mismatches > 20) break;
    }
  }
  EXPECT_GE(pairs, 10000u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(MatchKey, NormalizesCaseFormsAndInflection) {
  EXPECT_EQ(match_key("Neural Networks"), "neural network");
  EXPECT_EQ(match_key("  neural   network "), "neural network");
  EXPECT_EQ(match_key("CAFÉ"), match_key("café"));  // NFC before folding
  const std::string once = match_key("Running Dogs");
  EXPECT_EQ(match_key(once), once);
}

TEST(F1AtK, HandCase) {
  const std::vector<std::string> gold = {"a", "b", "c"};
  const PRF s = f1_at_k(pred_of({"a", "d", "e"}), gold, 5);
  EXPECT_EQ(s.precision, 1.0 / 3.0);
  EXPECT_EQ(s.recall, 1.0 / 3.0);
  EXPECT_EQ(s.f1, 1.0 / 3.0);
}

TEST(F1AtK, PerfectAndEmpty) {
  const std::vector<std::string> gold = {"graph", "deep model"};
  const PRF perfect = f1_at_k(pred_of({"Deep Models", "graphs"}), gold, 5);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const PRF none = f1_at_k(KeyphrasePrediction{}, gold, 5);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_THROW(f1_at_k(KeyphrasePrediction{}, gold, 0), ConfigError);
}

TEST(F1AtK, StemDuplicatesNeverAddMatches) {
  const std::vector<std::string> gold = {"graph", "net"};
  const PRF base = f1_at_k(pred_of({"graph"}), gold, 5);
  const PRF dup = f1_at_k(pred_of({"graph", "graphs", "Graph"}), gold, 5);
  EXPECT_EQ(base.recall, dup.recall);
  EXPECT_LT(dup.precision, base.precision);
}

TEST(F1AtK, RecallMonotoneInK) {
  nn::RngStream rng(1, "monotone");
  for (int trial = 0; trial < 200; ++trial) {
    KeyphrasePrediction pred;
    std::vector<std::string> gold;
    for (std::size_t i = 0; i < 1 + rng.below(6); ++i) gold.push_back(testing::random_phrase(rng).text);
    for (std::size_t i = 0; i < rng.below(12); ++i) {
      pred.phrases.push_back({testing::random_phrase(rng).text, 0.0, i});
    }
    double prev = -1.0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double r = f1_at_k(pred, gold, k).recall;
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(EvaluateCorpus, MacroAverage) {
  std::map<std::string, KeyphrasePrediction> preds = {{"d1", pred_of({"x"})},
                                                      {"d2", pred_of({"q"})}};
  const std::vector<GoldDocument> golds = {{"d1", {"x"}}, {"d2", {"y"}}, {"d3", {}}};
  const std::size_t ks[] = {5};
  const EvalReport r = evaluate_corpus(preds, golds, ks);
  EXPECT_EQ(r.documents.size(), 2u);
  EXPECT_DOUBLE_EQ(r.macro.at(5).f1, 0.5);
}

TEST(EvaluateCorpus, SingleDocumentEqualsItsScore) {
  std::map<std::string, KeyphrasePrediction> preds = {{"d", pred_of({"a", "b", "z"})}};
  const std::vector<GoldDocument> golds = {{"d", {"a", "c"}}};
  const std::size_t ks[] = {1, 2, 5};
  const EvalReport r = evaluate_corpus(preds, golds, ks);
  for (std::size_t k : ks) {
    const PRF direct = f1_at_k(preds.at("d"), golds[0].keywords, k);
    EXPECT_EQ(r.macro.at(k).precision, direct.precision);
    EXPECT_EQ(r.macro.at(k).recall, direct.recall);
    EXPECT_EQ(r.macro.at(k).f1, direct.f1);
  }
}

TEST(EvaluateCorpus, MissingPredictionScoresZeroAndUnknownIdIsError) {
  const std::vector<GoldDocument> golds = {{"d1", {"x"}}, {"d2", {"y"}}};
  const std::size_t ks[] = {5};
  std::map<std::string, KeyphrasePrediction> partial = {{"d1", pred_of({"x"})}};
  EXPECT_DOUBLE_EQ(evaluate_corpus(partial, golds, ks).macro.at(5).f1, 0.5);
  std::map<std::string, KeyphrasePrediction> stray = {{"zz", pred_of({"x"})}};
  EXPECT_THROW(evaluate_corpus(stray, golds, ks), DataError);
}

TEST(EvaluateCorpus, MatchesBruteForceScorer) {
  nn::RngStream rng(7, "brute-force");
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::string, KeyphrasePrediction> preds;
    std::vector<GoldDocument> golds;
    std::vector<std::vector<testing::OraclePhrase>> oracle_pred, oracle_gold;
    for (int d = 0; d < 200; ++d) {
      const std::string id = "doc" + std::to_string(d);
      std::vector<testing::OraclePhrase> gp, pp;
      for (std::size_t i = 0; i < rng.below(5); ++i) gp.push_back(testing::random_phrase(rng));
      for (std::size_t i = 0; i < rng.below(12); ++i) pp.push_back(testing::random_phrase(rng));
      GoldDocument gd{id, {}};
      for (const auto& p : gp) gd.keywords.push_back(p.text);
      golds.push_back(gd);
      KeyphrasePrediction kp;
      for (std::size_t i = 0; i < pp.size(); ++i) kp.phrases.push_back({pp[i].text, 0.0, i});
      preds.emplace(id, kp);
      oracle_pred.push_back(pp);
      oracle_gold.push_back(gp);
    }
    const std::size_t ks[] = {1, 3, 5, 10};
    const EvalReport r = evaluate_corpus(preds, golds, ks);
    for (std::size_t k : ks) {
      double p = 0, rc = 0, f = 0;
      int n = 0;
      for (std::size_t d = 0; d < golds.size(); ++d) {
        if (oracle_gold[d].empty()) continue;
        const auto s = testing::brute_force_score(oracle_pred[d], oracle_gold[d], k);
        p += s.p;
        rc += s.r;
        f += s.f1;
        ++n;
      }
      EXPECT_NEAR(r.macro.at(k).precision, p / n, 1e-12);
      EXPECT_NEAR(r.macro.at(k).recall, rc / n, 1e-12);
      EXPECT_NEAR(r.macro.at(k).f1, f / n, 1e-12);
    }
  }
}

TEST(EvaluateCorpus, JsonAndTable) {
  std::map<std::string, KeyphrasePrediction> preds = {{"d1", pred_of({"x"})}};
  const std::vector<GoldDocument> golds = {{"d1", {"x"}}};
  const std::size_t ks[] = {5, 10};
  const EvalReport r = evaluate_corpus(preds, golds, ks);
  const auto j = r.to_json();
  EXPECT_EQ(j["macro"]["5"]["f1"], 1.0);
  EXPECT_EQ(j["documents"].size(), 1u);
  EXPECT_NE(r.to_table().find("@10"), std::string::npos);
}

TEST(Aggregate, MeanAndSampleStd) {
  const double same[] = {0.4, 0.4, 0.4};
  EXPECT_EQ(mean_std(same).stddev, 0.0);
  const double two[] = {0.3, 0.5};
  const MeanStd ms = mean_std(two);
  EXPECT_NEAR(ms.mean, 0.4, 1e-15);
  EXPECT_NEAR(ms.stddev, std::sqrt(0.02), 1e-15);
  const double one[] = {0.7};
  EXPECT_EQ(mean_std(one).stddev, 0.0);
}

TEST(Aggregate, AcrossReports) {
  std::vector<EvalReport> reports(2);
  for (auto& r : reports) r.ks = {5};
  reports[0].macro[5] = {0.3, 0.3, 0.3};
  reports[1].macro[5] = {0.5, 0.5, 0.5};
  const AggregateReport a = aggregate_runs(reports);
  EXPECT_EQ(a.runs, 2u);
  EXPECT_NEAR(a.f1.at(5).mean, 0.4, 1e-15);
  EXPECT_NEAR(a.f1.at(5).stddev, 0.1414213562373095, 1e-12);
  EXPECT_EQ(a.to_json()["metrics"]["5"]["f1"]["mean"], a.f1.at(5).mean);
  EXPECT_THROW(aggregate_runs({}), ConfigError);
}

}  // namespace
}  // namespace seke::evaluation
