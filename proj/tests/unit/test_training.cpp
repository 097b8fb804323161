// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "seke/errors.hpp"
#include "seke/synthetic.hpp"
#include "seke/training.hpp"

namespace seke::training {
namespace {

using data::Document;

std::vector<Document> numbered_docs(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back({"d" + std::to_string(i), "word" + std::to_string(i), {}});
  }
  return docs;
}

model::ModelConfig tiny_model_config() {
  model::ModelConfig cfg;
  cfg.toy.num_layers = 1;
  cfg.toy.num_heads = 2;
  cfg.toy.d_model = 8;
  cfg.toy.d_ff = 16;
  cfg.toy.lora_rank = 2;
  cfg.head.moe.n_experts = 4;
  cfg.head.moe.top_k = 2;
  cfg.head.moe.d_hidden = 8;
  cfg.freeze = backbone::FreezeMode::kFull;
  return cfg;
}

TrainConfig tiny_train_config(std::uint64_t seed) {
  TrainConfig tc;
  tc.seed = seed;
  tc.max_epochs = 3;
  tc.batch_size = 4;
  tc.selection_k = 5;
  return tc;
}

const synthetic::Corpus& small_corpus() {
  static const synthetic::Corpus c = synthetic::generate(20, 7, synthetic::Rule::kMarker);
  return c;
}

TEST(SplitValidation, FloorRule) {
  const Split ten = split_validation(numbered_docs(10), 1);
  EXPECT_EQ(ten.train.size(), 8u);
  EXPECT_EQ(ten.dev.size(), 2u);
  const Split five = split_validation(numbered_docs(5), 1);
  EXPECT_EQ(five.train.size(), 4u);
  EXPECT_EQ(five.dev.size(), 1u);
  const Split odd = split_validation(numbered_docs(13), 1);
  EXPECT_EQ(odd.train.size(), 10u);
  EXPECT_EQ(odd.dev.size(), 3u);
}

TEST(SplitValidation, TooFewDocuments) {
  EXPECT_THROW(split_validation(numbered_docs(4), 1), DataError);
  EXPECT_THROW(split_validation({}, 1), DataError);
}

TEST(SplitValidation, DeterministicDisjointExhaustive) {
  const auto docs = numbered_docs(50);
  const Split a = split_validation(docs, 9);
  const Split b = split_validation(docs, 9);
  std::vector<std::string> ids_a, ids_b;
  for (const auto* part : {&a.train, &a.dev}) {
    for (const auto& d : *part) ids_a.push_back(d.id);
  }
  for (const auto* part : {&b.train, &b.dev}) {
    for (const auto& d : *part) ids_b.push_back(d.id);
  }
  EXPECT_EQ(ids_a, ids_b);
  const std::set<std::string> unique(ids_a.begin(), ids_a.end());
  EXPECT_EQ(unique.size(), docs.size());

  const Split c = split_validation(docs, 10);
  std::vector<std::string> ids_c;
  for (const auto& d : c.train) ids_c.push_back(d.id);
  EXPECT_NE(std::vector<std::string>(ids_a.begin(), ids_a.begin() + 40), ids_c);
}

TEST(EarlyStopperTest, SpecSequence) {
  EarlyStopper s(3);
  const double metrics[] = {0.1, 0.2, 0.2, 0.18, 0.19};
  std::size_t epochs = 0;
  for (double m : metrics) {
    s.observe(m);
    ++epochs;
    if (s.should_stop()) break;
  }
  EXPECT_EQ(epochs, 5u);
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_DOUBLE_EQ(s.best_metric(), 0.2);
}

TEST(EarlyStopperTest, LargePatienceNeverStops) {
  EarlyStopper s(20);
  for (int e = 0; e < 20; ++e) {
    EXPECT_FALSE(s.should_stop());
    s.observe(0.5 - 0.01 * e);
  }
  EXPECT_FALSE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1u);
}

TEST(EarlyStopperTest, DisabledNeverStops) {
  EarlyStopper s(1, false);
  s.observe(0.5);
  s.observe(0.1);
  s.observe(0.1);
  EXPECT_FALSE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1u);
}

TEST(EarlyStopperTest, ZeroPatienceRejected) { EXPECT_THROW(EarlyStopper(0), ConfigError); }

// The selected epoch is the first maximum of everything observed.
TEST(EarlyStopperTest, BestIsFirstMaximumProperty) {
  nn::RngStream rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t patience = 1 + rng.below(4);
    EarlyStopper s(patience);
    std::vector<double> seen;
    while (!s.should_stop() && seen.size() < 20) {
      seen.push_back(static_cast<double>(rng.below(6)) / 5.0);
      s.observe(seen.back());
    }
    const auto best = std::max_element(seen.begin(), seen.end());
    EXPECT_EQ(s.best_epoch(), static_cast<std::size_t>(best - seen.begin()) + 1);
    if (s.should_stop()) EXPECT_EQ(seen.size(), s.best_epoch() + patience);
  }
}

TEST(TrainConfigTest, ValidationAndJson) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.lr, 2e-4);
  EXPECT_EQ(c.max_epochs, 20u);
  EXPECT_EQ(c.patience, 3u);
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);

  TrainConfig d;
  d.seed = 42;
  d.early_stopping = false;
  EXPECT_EQ(TrainConfig::from_json(d.to_json()).to_json(), d.to_json());
  EXPECT_THROW(TrainConfig::from_json({{"learning_rate", 0.1}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"patience", "3"}}), ConfigError);
}

TEST(MakeExample, TargetsFollowBioAndTruncation) {
  const Document doc{"x", "the red fox jumps", {"red fox"}};
  const Example ex = make_example(doc, 256);
  EXPECT_EQ(ex.inputs, (std::vector<std::string>{"the", "red", "fox", "jumps"}));
  EXPECT_EQ(ex.targets, (std::vector<int>{0, 1, 2, 0}));
  // A gold phrase cut by truncation no longer matches.
  EXPECT_EQ(make_example(doc, 2).targets, (std::vector<int>{0, 0}));
  EXPECT_EQ(make_example(doc, 3).targets, (std::vector<int>{0, 1, 2}));
}

double clean_loss(const model::KeyphraseModel& m, const std::vector<Example>& batch) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : batch) {
    nn::Graph g(false);
    nn::RngStream unused(0);
    const auto fwd = m.forward(g, ex.inputs, unused, false);
    const std::size_t n = ex.targets.size();
    const auto mask = std::make_unique<bool[]>(n);
    std::fill_n(mask.get(), n, true);
    const nn::Var loss = g.cross_entropy(fwd.logits, ex.targets, std::span(mask.get(), n));
    total += g.value(loss)[0] * static_cast<double>(ex.targets.size());
    tokens += ex.targets.size();
  }
  return total / static_cast<double>(tokens);
}

// Sanity: on a fixed batch at lr 2e-4 the median loss over three seeds falls
// at each of the first five steps.
TEST(TrainStep, LossDecreasesOnFixedBatch) {
  const auto& docs = small_corpus().docs;
  std::vector<Example> batch;
  for (std::size_t i = 0; i < 8; ++i) batch.push_back(make_example(docs[i], 256));
  std::vector<const Example*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);

  std::vector<std::vector<double>> curves;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    model::ModelConfig cfg = tiny_model_config();
    std::vector<std::string> texts;
    for (const auto& d : docs) texts.push_back(d.text);
    auto m = model::KeyphraseModel::create(cfg, model::build_vocab(texts, 256), seed);
    nn::AdamState adam;
    adam.lr = 2e-4;
    nn::RngStream rng(seed, "steps");
    std::vector<double> curve{clean_loss(m, batch)};
    for (int step = 0; step < 5; ++step) {
      train_step(m, adam, ptrs, rng);
      curve.push_back(clean_loss(m, batch));
    }
    curves.push_back(curve);
  }
  std::vector<double> median;
  for (std::size_t s = 0; s <= 5; ++s) {
    std::vector<double> v = {curves[0][s], curves[1][s], curves[2][s]};
    std::sort(v.begin(), v.end());
    median.push_back(v[1]);
  }
  for (std::size_t s = 1; s <= 5; ++s) EXPECT_LT(median[s], median[s - 1]) << "step " << s;
}

TEST(TrainStep, NonFiniteLossLeavesParametersUntouched) {
  const auto& docs = small_corpus().docs;
  std::vector<std::string> texts = {docs[0].text};
  auto m = model::KeyphraseModel::create(tiny_model_config(), model::build_vocab(texts, 256), 1);
  m.params().at("head.cls.b").value[0] = std::numeric_limits<double>::quiet_NaN();
  const Example ex = make_example(docs[0], 256);
  const Example* batch[] = {&ex};
  const nn::Tensor before = m.params().at("head.cls.w").value;
  nn::AdamState adam;
  nn::RngStream rng(1);
  EXPECT_FALSE(std::isfinite(train_step(m, adam, batch, rng)));
  EXPECT_EQ(m.params().at("head.cls.w").value, before);
}

TEST(Train, DivergenceNamesEpochAndBatch) {
  const auto split = split_validation(small_corpus().docs, 1);
  std::vector<std::string> texts;
  for (const auto& d : split.train) texts.push_back(d.text);
  auto init =
      model::KeyphraseModel::create(tiny_model_config(), model::build_vocab(texts, 256), 1);
  init.params().at("head.cls.b").value[1] = std::numeric_limits<double>::infinity();
  try {
    train(tiny_model_config(), tiny_train_config(1), split.train, split.dev, &init);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsEmptySets) {
  const auto split = split_validation(small_corpus().docs, 1);
  EXPECT_THROW(train(tiny_model_config(), tiny_train_config(1), {}, split.dev), DataError);
  EXPECT_THROW(train(tiny_model_config(), tiny_train_config(1), split.train, {}), DataError);
}

TEST(Train, IncompatibleWarmStartIsConfigError) {
  const auto split = split_validation(small_corpus().docs, 1);
  std::vector<std::string> texts;
  for (const auto& d : split.train) texts.push_back(d.text);
  model::ModelConfig no_rnn = tiny_model_config();
  no_rnn.head.use_rnn = false;
  const auto init = model::KeyphraseModel::create(no_rnn, model::build_vocab(texts, 256), 1);
  EXPECT_THROW(train(tiny_model_config(), tiny_train_config(1), split.train, split.dev, &init),
               ConfigError);
}

TEST(Train, DeterministicHistoryAndParameters) {
  const auto split = split_validation(small_corpus().docs, 3);
  const auto a = train(tiny_model_config(), tiny_train_config(5), split.train, split.dev);
  const auto b = train(tiny_model_config(), tiny_train_config(5), split.train, split.dev);
  EXPECT_EQ(a.history.to_json(), b.history.to_json());
  for (const auto& [name, p] : a.best.params()) {
    EXPECT_EQ(p.value, b.best.params().at(name).value) << name;
  }
}

TEST(Train, HistoryInvariants) {
  const auto split = split_validation(small_corpus().docs, 2);
  TrainConfig tc = tiny_train_config(2);
  tc.max_epochs = 6;
  tc.patience = 2;
  std::vector<EpochRecord> seen;
  const auto r = train(tiny_model_config(), tc, split.train, split.dev, nullptr, nullptr,
                       [&](const EpochRecord& e) { seen.push_back(e); });
  const auto& h = r.history;
  ASSERT_FALSE(h.epochs.empty());
  EXPECT_EQ(seen.size(), h.epochs.size());
  EXPECT_LE(h.epochs.size(), tc.max_epochs);
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    EXPECT_EQ(h.epochs[i].epoch, i + 1);
    EXPECT_TRUE(std::isfinite(h.epochs[i].train_loss));
    if (i + 1 < h.best_epoch) EXPECT_LT(h.epochs[i].dev_metric, h.best_metric());
    EXPECT_LE(h.epochs[i].dev_metric, h.best_metric());
  }
  if (h.epochs.size() < tc.max_epochs) EXPECT_EQ(h.epochs.size(), h.best_epoch + tc.patience);
  EXPECT_FALSE(h.to_json().at("epochs")[0].contains("seconds"));
  EXPECT_TRUE(h.to_json(true).at("epochs")[0].contains("seconds"));
}

TEST(Train, PatienceAtLeastMaxEpochsRunsAll) {
  const auto split = split_validation(small_corpus().docs, 4);
  TrainConfig tc = tiny_train_config(4);
  tc.max_epochs = 20;
  tc.patience = 20;
  tc.batch_size = 16;
  const auto r = train(tiny_model_config(), tc, split.train, split.dev);
  EXPECT_EQ(r.history.epochs.size(), 20u);
}

TEST(Predict, ThreadCountDoesNotChangeOutput) {
  const auto& docs = small_corpus().docs;
  std::vector<std::string> texts;
  for (const auto& d : docs) texts.push_back(d.text);
  const auto m =
      model::KeyphraseModel::create(tiny_model_config(), model::build_vocab(texts, 256), 2);
  const auto one = predict(m, docs, 1, true);
  const auto three = predict(m, docs, 3, true);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].id, three[i].id);
    EXPECT_EQ(one[i].sequence.probs, three[i].sequence.probs);
    EXPECT_EQ(one[i].keyphrases.phrases.size(), three[i].keyphrases.phrases.size());
    EXPECT_EQ(one[i].decisions.size(), one[i].sequence.tokens.size());
  }
}

}  // namespace
}  // namespace seke::training
