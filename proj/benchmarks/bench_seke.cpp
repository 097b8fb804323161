// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "seke/analysis.hpp"
#include "seke/evaluation.hpp"
#include "seke/labeling.hpp"
#include "seke/model.hpp"
#include "seke/moe.hpp"
#include "seke/nn/adam.hpp"
#include "seke/synthetic.hpp"
#include "seke/training.hpp"

namespace {

using namespace seke;

nn::Tensor random_tensor(nn::Shape shape, nn::RngStream& rng) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Sparse MoE layer over T tokens; args: tokens, experts, top-k.
void BM_MoEForward(benchmark::State& state) {
  moe::MoEConfig cfg;
  cfg.n_experts = static_cast<std::size_t>(state.range(1));
  cfg.top_k = static_cast<std::size_t>(state.range(2));
  cfg.d_model = 64;
  cfg.d_hidden = 64;
  cfg.zero_init_router = false;
  nn::ParamStore store;
  nn::RngStream rng(1);
  const auto params = moe::MoEParams::create(store, "moe", cfg, rng);
  const nn::Tensor x = random_tensor({static_cast<std::size_t>(state.range(0)), 64}, rng);
  for (auto _ : state) {
    nn::Graph g(false);
    auto out = moe::moe_forward(g, g.constant(x), params, cfg, rng, false);
    benchmark::DoNotOptimize(g.value(out.y).data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MoEForward)->Args({128, 4, 2})->Args({128, 8, 2})->Args({128, 8, 1})->Args({512, 8, 2});

model::ModelConfig desk_config() {
  model::ModelConfig cfg;
  cfg.toy.num_layers = 2;
  cfg.toy.num_heads = 2;
  cfg.toy.d_model = 64;
  cfg.toy.d_ff = 128;
  cfg.toy.lora_rank = 4;
  cfg.head.moe.n_experts = 4;
  cfg.head.moe.top_k = 2;
  cfg.head.moe.d_hidden = 64;
  cfg.freeze = backbone::FreezeMode::kFull;
  return cfg;
}

const synthetic::Corpus& corpus() {
  static const synthetic::Corpus c = synthetic::generate(64, 1, synthetic::Rule::kMarker);
  return c;
}

model::KeyphraseModel desk_model() {
  std::vector<std::string> texts;
  for (const auto& d : corpus().docs) texts.push_back(d.text);
  return model::KeyphraseModel::create(desk_config(), model::build_vocab(texts, 256), 1);
}

// One Adam update on a two-document batch, full head and trainable backbone.
void BM_TrainStep(benchmark::State& state) {
  auto m = desk_model();
  nn::AdamState adam;
  nn::RngStream rng(2);
  std::vector<training::Example> examples;
  for (const auto& d : corpus().docs) examples.push_back(training::make_example(d, 256));
  std::size_t next = 0;
  for (auto _ : state) {
    const training::Example* batch[] = {&examples[next % examples.size()],
                                        &examples[(next + 1) % examples.size()]};
    next += 2;
    benchmark::DoNotOptimize(training::train_step(m, adam, batch, rng));
  }
  state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

// Inference plus decoding for one document.
void BM_Label(benchmark::State& state) {
  const auto m = desk_model();
  std::size_t next = 0;
  for (auto _ : state) {
    const auto seq = m.label(corpus().docs[next++ % corpus().docs.size()].text);
    benchmark::DoNotOptimize(labeling::postprocess(labeling::decode_keyphrases(seq)));
  }
}
BENCHMARK(BM_Label)->Unit(benchmark::kMicrosecond);

void BM_PorterStem(benchmark::State& state) {
  const std::vector<std::string> words = {"generalizations", "oscillators", "relational",
                                          "conditional", "hopefulness", "agreed", "running",
                                          "sky", "electrical", "adjustment"};
  for (auto _ : state) {
    for (const auto& w : words) benchmark::DoNotOptimize(evaluation::porter_stem(w));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(words.size()));
}
BENCHMARK(BM_PorterStem);

void BM_Tokenize(benchmark::State& state) {
  std::string text;
  for (const auto& d : corpus().docs) text += d.text + " ";
  for (auto _ : state) benchmark::DoNotOptimize(labeling::tokenize(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize);

// Contingency table and corrected V over N routed tokens.
void BM_CramersV(benchmark::State& state) {
  nn::RngStream rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> experts(n);
  std::vector<std::string> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    experts[i] = rng.below(8);
    values[i] = "v" + std::to_string(rng.below(20));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        analysis::cramers_v_corrected(analysis::build_contingency(experts, values)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CramersV)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
