// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seke/ablation.hpp"
#include "seke/analysis.hpp"
#include "seke/checkpoint.hpp"
#include "seke/data.hpp"
#include "seke/errors.hpp"
#include "seke/evaluation.hpp"
#include "seke/synthetic.hpp"
#include "seke/training.hpp"

namespace seke::cli {
namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

/// Timestamps and wall times never enter an artifact; they go to a sidecar
/// next to it so that reruns with the same flags give identical files.
class RunMeta {
 public:
  RunMeta(std::string command, const CommonOptions& common)
      : command_(std::move(command)), argv_(common.argv), started_(utc_now()),
        t0_(Clock::now()) {}

  void artifact(const std::string& path) { artifacts_.push_back(path); }
  nlohmann::json& extra() { return extra_; }

  void write_beside(const std::string& path) const {
    if (path.empty()) return;
    nlohmann::json j = {{"command", command_},
                        {"argv", argv_},
                        {"started", started_},
                        {"finished", utc_now()},
                        {"seconds", std::chrono::duration<double>(Clock::now() - t0_).count()},
                        {"artifacts", artifacts_}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    std::ofstream out(path + ".meta.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + path + ".meta.json");
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string started_;
  Clock::time_point t0_;
  std::vector<std::string> artifacts_;
  nlohmann::json extra_ = nlohmann::json::object();
};

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string pick(const std::string& flag, const std::string& from_config) {
  return flag.empty() ? from_config : flag;
}

std::string require(std::string value, const char* what) {
  if (value.empty()) throw ConfigError(fmt::format("missing {}", what));
  return value;
}

std::unique_ptr<backbone::EmbeddingTable> load_table(const model::ModelConfig& cfg) {
  if (cfg.backbone != model::BackboneKind::kStatic) return nullptr;
  require(cfg.embeddings_path, "model.embeddings_path for the static backbone");
  return std::make_unique<backbone::EmbeddingTable>(
      backbone::load_embedding_table(cfg.embeddings_path));
}

/// Dev documents from their own file, or else a seeded split of the training file.
training::Split train_dev(const std::string& train_path, const std::string& dev_path,
                          std::uint64_t seed) {
  auto train = data::load_jsonl(train_path);
  if (!dev_path.empty()) return {std::move(train), data::load_jsonl(dev_path)};
  return training::split_validation(train, seed);
}

std::string history_table(const training::TrainHistory& h, std::size_t k) {
  std::string out = fmt::format("{:>5} {:>12} {:>10}\n", "epoch", "train_loss",
                                fmt::format("dev_F1@{}", k));
  for (const auto& e : h.epochs) {
    out += fmt::format("{:>5} {:>12.6f} {:>10.4f}{}\n", e.epoch, e.train_loss, e.dev_metric,
                       e.epoch == h.best_epoch ? "  *" : "");
  }
  return out;
}

std::vector<data::PredictionRecord> to_records(std::span<const training::DocumentPrediction> p) {
  std::vector<data::PredictionRecord> out;
  out.reserve(p.size());
  for (const auto& d : p) out.push_back({d.id, d.keyphrases});
  return out;
}

}  // namespace

RunConfig resolve_config(const CommonOptions& common, const ModelOverrides& o) {
  RunConfig rc = common.config_path.empty() ? RunConfig{} : RunConfig::load(common.config_path);
  auto& m = rc.model;
  if (o.moe) m.head.use_moe = *o.moe;
  if (o.rnn) m.head.use_rnn = *o.rnn;
  if (o.experts) m.head.moe.n_experts = *o.experts;
  if (o.top_k) m.head.moe.top_k = *o.top_k;
  if (o.freeze) m.freeze = backbone::parse_freeze_mode(*o.freeze);
  if (o.backbone) m.backbone = model::parse_backbone_kind(*o.backbone);
  if (o.embeddings) m.embeddings_path = *o.embeddings;
  if (o.max_len) m.max_len = *o.max_len;
  if (o.dropout) rc.dropout_p = *o.dropout;
  if (o.lr) rc.train.lr = *o.lr;
  if (o.epochs) rc.train.max_epochs = *o.epochs;
  if (o.patience) rc.train.patience = *o.patience;
  if (o.batch_size) rc.train.batch_size = *o.batch_size;
  if (o.selection_k) rc.train.selection_k = *o.selection_k;
  if (o.no_early_stopping) rc.train.early_stopping = false;
  if (!o.ks.empty()) rc.ks = o.ks;
  if (common.seed) rc.train.seed = *common.seed;
  rc.train.jobs = common.jobs;
  rc.validate();
  return rc;
}

int cmd_train(const CommonOptions& common, const ModelOverrides& overrides,
              const TrainOptions& opts) {
  const RunConfig rc = resolve_config(common, overrides);
  const std::string train_path = require(pick(opts.train, rc.paths.train), "--train");
  const std::string ckpt_path =
      require(pick(opts.checkpoint, rc.paths.checkpoint), "--checkpoint");
  const std::string init_path = pick(opts.init, rc.paths.init);
  const model::ModelConfig model_cfg = rc.effective_model();

  RunMeta meta("train", common);
  const auto split = train_dev(train_path, pick(opts.dev, rc.paths.dev), rc.train.seed);
  const auto table = load_table(model_cfg);
  std::optional<Checkpoint> init;
  if (!init_path.empty()) init.emplace(load_checkpoint(init_path));

  const auto result = training::train(
      model_cfg, rc.train, split.train, split.dev, init ? &init->model : nullptr, table.get(),
      [&](const training::EpochRecord& e) {
        std::cerr << fmt::format("epoch {}: loss {:.6f}, dev F1@{} {:.4f} ({:.1f} s)\n", e.epoch,
                                 e.train_loss, rc.train.selection_k, e.dev_metric, e.seconds);
      });
  save_checkpoint(ckpt_path, result.best, rc.train);
  meta.artifact(ckpt_path);

  std::cout << history_table(result.history, rc.train.selection_k);
  std::cout << fmt::format("best epoch {} (dev F1@{} {:.4f}); {} train / {} dev documents\n",
                           result.history.best_epoch, rc.train.selection_k,
                           result.history.best_metric(), split.train.size(), split.dev.size());
  if (!common.out.empty()) {
    write_json(common.out, {{"config", rc.to_json()},
                            {"train_docs", split.train.size()},
                            {"dev_docs", split.dev.size()},
                            {"history", result.history.to_json()},
                            {"checkpoint", ckpt_path}});
    meta.artifact(common.out);
  }
  meta.extra()["epochs"] = result.history.to_json(true).at("epochs");
  meta.write_beside(ckpt_path);
  return 0;
}

int cmd_predict(const CommonOptions& common, const PredictOptions& opts) {
  const RunConfig rc = resolve_config(common, {});
  const Checkpoint ckpt =
      load_checkpoint(require(pick(opts.checkpoint, rc.paths.checkpoint), "--checkpoint"));
  const auto docs = data::load_jsonl(require(pick(opts.input, rc.paths.test), "--input"));

  RunMeta meta("predict", common);
  const auto records = to_records(training::predict(ckpt.model, docs, common.jobs));
  if (common.out.empty()) {
    data::write_predictions(std::cout, records);
    return 0;
  }
  data::save_predictions(common.out, records);
  meta.artifact(common.out);
  meta.write_beside(common.out);
  std::size_t phrases = 0;
  for (const auto& r : records) phrases += r.prediction.phrases.size();
  std::cout << fmt::format("{} documents, {} keyphrases -> {}\n", records.size(), phrases,
                           common.out);
  return 0;
}

int cmd_eval(const CommonOptions& common, const EvalOptions& opts) {
  ModelOverrides o;
  o.ks = opts.ks;
  const RunConfig rc = resolve_config(common, o);
  const auto docs = data::load_jsonl(require(pick(opts.input, rc.paths.test), "--input"));

  std::map<std::string, labeling::KeyphrasePrediction> preds;
  if (!opts.predictions.empty()) {
    for (auto& r : data::load_predictions(opts.predictions)) {
      preds.emplace(std::move(r.id), std::move(r.prediction));
    }
  } else {
    const Checkpoint ckpt = load_checkpoint(
        require(pick(opts.checkpoint, rc.paths.checkpoint), "--checkpoint or --predictions"));
    preds = training::prediction_map(training::predict(ckpt.model, docs, common.jobs));
  }

  RunMeta meta("eval", common);
  const auto gold = data::gold_of(docs);
  const auto report = evaluation::evaluate_corpus(preds, gold, rc.ks);
  std::cout << report.to_table();
  if (!common.out.empty()) {
    write_json(common.out, report.to_json());
    meta.artifact(common.out);
    meta.write_beside(common.out);
  }
  return 0;
}

int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& opts) {
  const RunConfig rc = resolve_config(common, {});
  const Checkpoint ckpt =
      load_checkpoint(require(pick(opts.checkpoint, rc.paths.checkpoint), "--checkpoint"));
  const auto docs = data::load_jsonl(require(pick(opts.input, rc.paths.test), "--input"));
  const std::string ann_path = pick(opts.annotations, rc.paths.annotations);
  if (!opts.extra_categories.empty() && ann_path.empty()) {
    throw ConfigError("--category needs an annotation file");
  }

  RunMeta meta("analyze", common);
  const auto traces = analysis::trace_experts(ckpt.model, docs, common.jobs);
  std::vector<analysis::AnnotatedDocument> annotations;
  std::map<std::string, const analysis::AnnotatedDocument*> by_id;
  if (!ann_path.empty()) {
    annotations = analysis::load_annotations(ann_path);
    by_id = analysis::align_annotations(annotations, docs);
  }
  const std::size_t n_experts = ckpt.model.config().head.moe.n_experts;
  auto report =
      analysis::specialization_from_traces(traces, n_experts, ann_path.empty() ? nullptr : &by_id);

  // Further per-token annotation fields (e.g. a synthetic "class") as extra rows.
  for (const auto& name : opts.extra_categories) {
    std::vector<std::size_t> experts;
    std::vector<std::string> values;
    for (const auto& t : traces) {
      const auto it = by_id.find(t.id);
      if (it == by_id.end()) continue;
      const auto field = it->second->extra.find(name);
      if (field == it->second->extra.end()) {
        throw DataError(fmt::format("{}: document {} has no \"{}\" field", ann_path, t.id, name));
      }
      for (std::size_t i = 0; i < t.experts.size(); ++i) {
        experts.push_back(t.experts[i]);
        values.push_back(field->second.at(i));
      }
    }
    analysis::CategoryRow row{name, std::nullopt, 0, ""};
    const auto table = analysis::build_contingency(experts, values);
    row.n_values = table.cols();
    try {
      row.v = analysis::cramers_v_corrected(table);
    } catch (const UndefinedStatistic& e) {
      row.note = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  std::cout << report.to_table();
  if (!opts.trace.empty()) {
    std::ofstream out(opts.trace, std::ios::binary);
    if (!out) throw DataError("cannot write " + opts.trace);
    analysis::write_trace_jsonl(out, traces);
    meta.artifact(opts.trace);
  }
  if (!common.out.empty()) {
    write_json(common.out, report.to_json());
    meta.artifact(common.out);
  }
  meta.write_beside(!common.out.empty() ? common.out : opts.trace);
  return 0;
}

int cmd_ablate(const CommonOptions& common, const ModelOverrides& overrides,
               const AblateOptions& opts) {
  if (overrides.moe || overrides.rnn) {
    throw ConfigError("ablate trains every head variant; --moe/--rnn do not apply");
  }
  RunConfig rc = resolve_config(common, overrides);
  if (!opts.seeds.empty()) rc.ablation_seeds = opts.seeds;
  const std::string train_path = require(pick(opts.train, rc.paths.train), "--train");
  const model::ModelConfig model_cfg = rc.effective_model();

  RunMeta meta("ablate", common);
  const auto split = train_dev(train_path, pick(opts.dev, rc.paths.dev), rc.train.seed);
  const std::string test_path = pick(opts.test, rc.paths.test);
  const auto test = test_path.empty() ? split.dev : data::load_jsonl(test_path);
  const auto table = load_table(model_cfg);

  const auto result = ablation::run_ablation(
      model_cfg, rc.train, split.train, split.dev, test, rc.ablation_seeds, rc.ks, table.get(),
      [&](const ablation::HeadVariant& v, std::uint64_t seed, double f1) {
        std::cerr << fmt::format("{} seed {}: F1@{} {:.4f}\n", v.name, seed, rc.ks.front(), f1);
      });
  std::cout << result.to_table();
  if (!common.out.empty()) {
    nlohmann::json j = result.to_json();
    j["config"] = rc.to_json();
    j["eval_set"] = test_path.empty() ? "dev" : test_path;
    write_json(common.out, j);
    meta.artifact(common.out);
    meta.write_beside(common.out);
  }
  return 0;
}

int cmd_gen_synthetic(const CommonOptions& common, const GenOptions& opts) {
  const std::string out_path = require(common.out, "--out");
  const auto rule = synthetic::parse_rule(opts.rule);
  std::string ann_path = opts.annotations;
  if (ann_path.empty()) {
    const bool jsonl = out_path.ends_with(".jsonl");
    ann_path = (jsonl ? out_path.substr(0, out_path.size() - 6) : out_path) + ".ann.jsonl";
  }

  RunMeta meta("gen-synthetic", common);
  const auto corpus = synthetic::generate(opts.n_docs, common.seed.value_or(0), rule);
  data::save_jsonl(out_path, corpus.docs);
  {
    std::ofstream out(ann_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + ann_path);
    analysis::write_annotations(out, corpus.annotations);
  }
  meta.artifact(out_path);
  meta.artifact(ann_path);
  meta.write_beside(out_path);

  std::size_t tokens = 0, phrases = 0;
  for (const auto& a : corpus.annotations) tokens += a.tokens.size();
  for (const auto& d : corpus.docs) phrases += d.keywords.size();
  std::cout << fmt::format("{} {} documents, {} tokens, {} gold keyphrases -> {}, {}\n",
                           corpus.docs.size(), synthetic::to_string(rule), tokens, phrases,
                           out_path, ann_path);
  return 0;
}

}  // namespace seke::cli
