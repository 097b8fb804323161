// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

// seke: train, apply and analyze MoE keyphrase taggers.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 runtime failure (divergence included). Errors are also printed to stderr
// as one JSON object {"error": kind, "message": text}.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "seke/errors.hpp"

namespace {

using namespace seke::cli;

int fail(int code, const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

void add_common(CLI::App* cmd, CommonOptions& c, const char* out_help) {
  cmd->add_option("-c,--config", c.config_path, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "Random seed (overrides train.seed)");
  cmd->add_option("-j,--jobs", c.jobs, "Worker threads for document-parallel phases")
      ->check(CLI::PositiveNumber);
  cmd->add_option("-o,--out", c.out, out_help);
}

void add_model_flags(CLI::App* cmd, ModelOverrides& o, bool head_flags) {
  if (head_flags) {
    cmd->add_flag("--moe,!--no-moe", o.moe, "Enable the mixture-of-experts layer");
    cmd->add_flag("--rnn,!--no-rnn", o.rnn, "Enable the BiLSTM encoder");
  }
  cmd->add_option("--experts", o.experts, "Number of experts");
  cmd->add_option("--top-k", o.top_k, "Experts per token");
  cmd->add_option("--freeze", o.freeze, "Backbone policy: lora, full or frozen");
  cmd->add_option("--backbone", o.backbone, "toy or static");
  cmd->add_option("--embeddings", o.embeddings, "Word vector file for the static backbone");
  cmd->add_option("--max-len", o.max_len, "Document truncation in tokens");
  cmd->add_option("--dropout", o.dropout, "Dropout rate for backbone and head");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--epochs", o.epochs, "Maximum epochs");
  cmd->add_option("--patience", o.patience, "Early-stopping patience");
  cmd->add_option("--batch-size", o.batch_size, "Documents per update");
  cmd->add_option("--selection-k", o.selection_k, "k of the dev F1@k used for selection");
  cmd->add_flag("--no-early-stopping", o.no_early_stopping, "Always run every epoch");
  cmd->add_option("--ks", o.ks, "Cutoffs for F1@k")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MoE keyphrase extraction: training, inference, evaluation and analysis", "seke"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "seke 0.1.0");

  CommonOptions common;
  common.argv.assign(argv, argv + argc);
  ModelOverrides overrides;

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a model and write a checkpoint");
  add_common(train_cmd, common, "Write the training report as JSON");
  add_model_flags(train_cmd, overrides, true);
  train_cmd->add_option("--train", train.train, "Training documents (JSONL)");
  train_cmd->add_option("--dev", train.dev, "Validation documents; default: 20% of --train");
  train_cmd->add_option("--checkpoint", train.checkpoint, "Output checkpoint");
  train_cmd->add_option("--init", train.init, "Warm-start checkpoint");

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Extract keyphrases with a checkpoint");
  add_common(predict_cmd, common, "Prediction JSONL; default: stdout");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Model checkpoint");
  predict_cmd->add_option("-i,--input", predict.input, "Documents (JSONL)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold keyphrases");
  add_common(eval_cmd, common, "Write the report as JSON");
  eval_cmd->add_option("-i,--input", eval.input, "Gold documents (JSONL)");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Predict with this checkpoint");
  eval_cmd->add_option("--predictions", eval.predictions, "Score an existing prediction file");
  eval_cmd->add_option("--ks", eval.ks, "Cutoffs for F1@k")->delimiter(',');

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Expert specialization report");
  add_common(analyze_cmd, common, "Write the report as JSON");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint, "Model checkpoint (with MoE)");
  analyze_cmd->add_option("-i,--input", analyze.input, "Documents (JSONL)");
  analyze_cmd->add_option("--annotations", analyze.annotations, "POS/NE annotation JSONL");
  analyze_cmd->add_option("--trace", analyze.trace, "Also write per-token expert traces");
  analyze_cmd->add_option("--category", analyze.extra_categories,
                          "Extra annotation field to report (repeatable)");

  AblateOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare the four head configurations");
  add_common(ablate_cmd, common, "Write the comparison as JSON");
  add_model_flags(ablate_cmd, overrides, false);
  ablate_cmd->add_option("--train", ablate.train, "Training documents (JSONL)");
  ablate_cmd->add_option("--dev", ablate.dev, "Validation documents; default: 20% of --train");
  ablate_cmd->add_option("--test", ablate.test, "Evaluation documents; default: the dev set");
  ablate_cmd->add_option("--seeds", ablate.seeds, "Training seeds")->delimiter(',');

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic corpus");
  add_common(gen_cmd, common, "Corpus JSONL");
  gen_cmd->add_option("-n,--docs", gen.n_docs, "Number of documents");
  gen_cmd->add_option("--rule", gen.rule, "marker or vocabsplit");
  gen_cmd->add_option("--annotations", gen.annotations,
                      "Annotation JSONL; default: <out>.ann.jsonl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "config", e.what());
  }

  try {
    if (*train_cmd) return cmd_train(common, overrides, train);
    if (*predict_cmd) return cmd_predict(common, predict);
    if (*eval_cmd) return cmd_eval(common, eval);
    if (*analyze_cmd) return cmd_analyze(common, analyze);
    if (*ablate_cmd) return cmd_ablate(common, overrides, ablate);
    if (*gen_cmd) return cmd_gen_synthetic(common, gen);
  } catch (const seke::ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const seke::DataError& e) {
    return fail(3, "data", e.what());
  } catch (const seke::DivergenceError& e) {
    return fail(4, "divergence", e.what());
  } catch (const std::exception& e) {
    return fail(4, "runtime", e.what());
  }
  return 0;
}
