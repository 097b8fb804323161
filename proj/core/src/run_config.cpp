// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/run_config.hpp"

#include <fstream>

#include "json_util.hpp"
#include "seke/errors.hpp"

namespace seke {

model::ModelConfig RunConfig::effective_model() const {
  model::ModelConfig m = model;
  if (dropout_p) m.set_dropout(*dropout_p);
  return m;
}

void RunConfig::validate() const {
  if (dropout_p && !(*dropout_p >= 0.0 && *dropout_p < 1.0)) {
    throw ConfigError("dropout_p must be in [0, 1)");
  }
  effective_model().validate();
  train.validate();
  if (ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (std::size_t k : ks) {
    if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
  }
  if (ablation_seeds.empty()) throw ConfigError("ablation.seeds must not be empty");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"model", model.to_json()},
                      {"train", train.to_json()},
                      {"eval", {{"ks", ks}}},
                      {"ablation", {{"seeds", ablation_seeds}}},
                      {"paths",
                       {{"train", paths.train},
                        {"dev", paths.dev},
                        {"test", paths.test},
                        {"annotations", paths.annotations},
                        {"checkpoint", paths.checkpoint},
                        {"init", paths.init}}}};
  if (dropout_p) j["dropout_p"] = *dropout_p;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::StrictReader r(j, "config");
  if (const auto* m = r.child("model")) c.model = model::ModelConfig::from_json(*m);
  if (const auto* t = r.child("train")) c.train = training::TrainConfig::from_json(*t);
  if (r.has("dropout_p")) {
    double p = 0.0;
    r.read("dropout_p", p);
    c.dropout_p = p;
  }
  if (const auto* e = r.child("eval")) {
    detail::StrictReader er(*e, r.path("eval"));
    er.read("ks", c.ks);
    er.finish();
  }
  if (const auto* a = r.child("ablation")) {
    detail::StrictReader ar(*a, r.path("ablation"));
    ar.read("seeds", c.ablation_seeds);
    ar.finish();
  }
  if (const auto* p = r.child("paths")) {
    detail::StrictReader pr(*p, r.path("paths"));
    pr.read("train", c.paths.train);
    pr.read("dev", c.paths.dev);
    pr.read("test", c.paths.test);
    pr.read("annotations", c.paths.annotations);
    pr.read("checkpoint", c.paths.checkpoint);
    pr.read("init", c.paths.init);
    pr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace seke
