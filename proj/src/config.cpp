/* Copyright 2026 The OrdCon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ordcon/config.hpp"

#include "ordcon/errors.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

using nlohmann::json;

std::string to_string(BatchMode m) { return m == BatchMode::kAifr ? "aifr" : "age"; }

BatchMode parse_mode(const std::string& s) {
  if (s == "age") return BatchMode::kAge;
  if (s == "aifr") return BatchMode::kAifr;
  throw ConfigError("train.mode: expected 'age' or 'aifr', got '" + s + "'");
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
  return json{{"n_samples", s.n_samples},     {"n_identities", s.n_identities},
              {"age_lo", s.age_lo},           {"age_hi", s.age_hi},
              {"input_dim", s.input_dim},     {"noise_sigma", s.noise_sigma},
              {"warp_seed", s.warp_seed},     {"sample_seed", s.sample_seed}};
}

namespace {

template <class T>
T field(const json& j, const char* section, const char* key) {
  const std::string name = std::string(section) + "." + key;
  if (!j.contains(key)) throw ConfigError(name + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(name + ": wrong type (" + j.at(key).dump() + ")");
  }
}

void deep_merge(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(key + ": unknown configuration key");
    if (base[it.key()].is_object()) {
      deep_merge(base[it.key()], it.value(), key);
    } else {
      base[it.key()] = it.value();
    }
  }
}

json parse_value(const std::string& value) {
  try {
    return json::parse(value);
  } catch (const json::exception&) {
    return json(value);
  }
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec s;
  s.n_samples = field<std::size_t>(j, "data", "n_samples");
  s.n_identities = field<std::size_t>(j, "data", "n_identities");
  s.age_lo = field<int>(j, "data", "age_lo");
  s.age_hi = field<int>(j, "data", "age_hi");
  s.input_dim = field<std::size_t>(j, "data", "input_dim");
  s.noise_sigma = field<double>(j, "data", "noise_sigma");
  s.warp_seed = field<std::uint64_t>(j, "data", "warp_seed");
  s.sample_seed = field<std::uint64_t>(j, "data", "sample_seed");
  return s;
}

json default_config_json(BatchMode mode) {
  const bool aifr = mode == BatchMode::kAifr;
  json j;
  j["seed"] = 0;
  j["data"] = {{"n_samples", 2000}, {"n_identities", 50}, {"age_lo", 16},
               {"age_hi", 77},      {"input_dim", 32},    {"noise_sigma", 0.05},
               {"warp_seed", nullptr}, {"sample_seed", nullptr}};
  j["model"] = {{"hidden_dims", {64, 64}},
                {"d_age", 16},
                {"d_id", aifr ? 16 : 0},
                {"activation", "tanh"}};
  j["train"] = {{"mode", to_string(mode)},
                {"epochs_pretrain", aifr ? 60 : 30},
                {"epochs_finetune", 10},
                {"grl_start_epoch", 30},
                {"batch_size", aifr ? 32 : 256},
                {"finetune_batch_size", 64},
                {"lr", 2e-4},
                {"finetune_lr", 0.01},
                {"momentum", 0.9},
                {"weight_decay", 1e-4},
                {"holdout_fraction", 0.2},
                {"unfreeze_encoder", false},
                {"identity_weight", 1.0},
                {"contrast_weight", 1.0},
                {"seed", nullptr}};
  j["loss"] = {{"tau", 0.1},
               {"lambda_metric", 0.8},
               {"gamma", 10.0},
               {"soft_weights", true},
               {"log_ratio", false},
               {"include_positive_in_denominator", false},
               {"include_self_in_identity", false},
               {"use_order", true},
               {"mirror_regressive_backward", true}};
  j["groups"] = {{"granularity", 6}, {"origin", 0}};
  return j;
}

void apply_override(json& j, const std::string& dotted_key, const std::string& value) {
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty() || !node->is_object() || !node->contains(part)) {
      throw ConfigError(dotted_key + ": unknown configuration key");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError(dotted_key + ": cannot override a whole section");
  *node = parse_value(value);
}

void apply_ablation(json& j, const std::string& name) {
  if (name == "full") return;
  if (name == "order-only") {
    j["loss"]["lambda_metric"] = 0.0;
    j["loss"]["use_order"] = true;
  } else if (name == "metric-only") {
    j["loss"]["use_order"] = false;
  } else if (name == "hard-metric") {
    j["loss"]["soft_weights"] = false;
  } else {
    throw ConfigError("ablation: unknown '" + name + "' (full, order-only, metric-only, hard-metric)");
  }
}

json resolve_config(const ConfigSources& sources) {
  // the mode decides which defaults apply, so find it first
  BatchMode mode = BatchMode::kAge;
  if (sources.file.contains("train") && sources.file["train"].contains("mode")) {
    mode = parse_mode(sources.file["train"]["mode"].get<std::string>());
  }
  for (const auto& [k, v] : sources.overrides) {
    if (k == "train.mode") mode = parse_mode(parse_value(v).get<std::string>());
  }
  if (sources.forced_mode) mode = *sources.forced_mode;

  json j = default_config_json(mode);
  deep_merge(j, sources.file, "");
  for (const auto& [k, v] : sources.overrides) apply_override(j, k, v);
  j["train"]["mode"] = to_string(mode);

  std::uint64_t root = 0;
  try {
    root = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception&) {
    throw ConfigError("seed: expected a non-negative integer");
  }
  if (j["data"]["warp_seed"].is_null()) j["data"]["warp_seed"] = derive_seed(root, stream::kWarp);
  if (j["data"]["sample_seed"].is_null()) j["data"]["sample_seed"] = derive_seed(root, stream::kSamples);
  if (j["train"]["seed"].is_null()) j["train"]["seed"] = derive_seed(root, stream::kTrain);

  const RunConfig cfg = run_config_from_json(j);
  cfg.data.validate();
  cfg.pipeline.model.validate();
  cfg.pipeline.train.validate();
  cfg.pipeline.loss.validate();
  cfg.pipeline.groups.validate();
  return j;
}

json to_json(const RunConfig& cfg) {
  const auto& m = cfg.pipeline.model;
  const auto& t = cfg.pipeline.train;
  const auto& l = cfg.pipeline.loss;
  json j;
  j["seed"] = cfg.seed;
  j["data"] = synthetic_spec_to_json(cfg.data);
  j["model"] = {{"hidden_dims", m.hidden_dims},
                {"d_age", m.d_age},
                {"d_id", m.d_id},
                {"activation", to_string(m.activation)}};
  j["train"] = {{"mode", to_string(t.mode)},
                {"epochs_pretrain", t.epochs_pretrain},
                {"epochs_finetune", t.epochs_finetune},
                {"grl_start_epoch", t.grl_start_epoch},
                {"batch_size", t.batch_size},
                {"finetune_batch_size", t.finetune_batch_size},
                {"lr", t.lr},
                {"finetune_lr", t.finetune_lr},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"holdout_fraction", t.holdout_fraction},
                {"unfreeze_encoder", t.unfreeze_encoder},
                {"identity_weight", t.identity_weight},
                {"contrast_weight", t.contrast_weight},
                {"seed", t.seed}};
  j["loss"] = {{"tau", l.tau},
               {"lambda_metric", l.lambda_metric},
               {"gamma", l.gamma},
               {"soft_weights", l.soft_weights},
               {"log_ratio", l.log_ratio},
               {"include_positive_in_denominator", l.include_positive_in_denominator},
               {"include_self_in_identity", l.include_self_in_identity},
               {"use_order", l.use_order},
               {"mirror_regressive_backward", l.mirror_regressive_backward}};
  j["groups"] = {{"granularity", cfg.pipeline.groups.granularity},
                 {"origin", cfg.pipeline.groups.origin}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception&) {
    throw ConfigError("seed: expected a non-negative integer");
  }
  for (const char* section : {"data", "model", "train", "loss", "groups"}) {
    if (!j.contains(section) || !j.at(section).is_object()) {
      throw ConfigError(std::string(section) + ": missing section");
    }
  }
  c.data = synthetic_spec_from_json(j.at("data"));

  const json& m = j.at("model");
  c.pipeline.model.hidden_dims = field<std::vector<std::size_t>>(m, "model", "hidden_dims");
  c.pipeline.model.d_age = field<std::size_t>(m, "model", "d_age");
  c.pipeline.model.d_id = field<std::size_t>(m, "model", "d_id");
  c.pipeline.model.activation = parse_activation(field<std::string>(m, "model", "activation"));
  c.pipeline.model.input_dim = c.data.input_dim;

  const json& t = j.at("train");
  auto& tc = c.pipeline.train;
  tc.mode = parse_mode(field<std::string>(t, "train", "mode"));
  tc.epochs_pretrain = field<int>(t, "train", "epochs_pretrain");
  tc.epochs_finetune = field<int>(t, "train", "epochs_finetune");
  tc.grl_start_epoch = field<int>(t, "train", "grl_start_epoch");
  tc.batch_size = field<std::size_t>(t, "train", "batch_size");
  tc.finetune_batch_size = field<std::size_t>(t, "train", "finetune_batch_size");
  tc.lr = field<double>(t, "train", "lr");
  tc.finetune_lr = field<double>(t, "train", "finetune_lr");
  tc.momentum = field<double>(t, "train", "momentum");
  tc.weight_decay = field<double>(t, "train", "weight_decay");
  tc.holdout_fraction = field<double>(t, "train", "holdout_fraction");
  tc.unfreeze_encoder = field<bool>(t, "train", "unfreeze_encoder");
  tc.identity_weight = field<double>(t, "train", "identity_weight");
  tc.contrast_weight = field<double>(t, "train", "contrast_weight");
  tc.seed = field<std::uint64_t>(t, "train", "seed");

  const json& l = j.at("loss");
  auto& lc = c.pipeline.loss;
  lc.tau = field<double>(l, "loss", "tau");
  lc.lambda_metric = field<double>(l, "loss", "lambda_metric");
  lc.gamma = field<double>(l, "loss", "gamma");
  lc.soft_weights = field<bool>(l, "loss", "soft_weights");
  lc.log_ratio = field<bool>(l, "loss", "log_ratio");
  lc.include_positive_in_denominator = field<bool>(l, "loss", "include_positive_in_denominator");
  lc.include_self_in_identity = field<bool>(l, "loss", "include_self_in_identity");
  lc.use_order = field<bool>(l, "loss", "use_order");
  lc.mirror_regressive_backward = field<bool>(l, "loss", "mirror_regressive_backward");

  const json& g = j.at("groups");
  c.pipeline.groups.granularity = field<int>(g, "groups", "granularity");
  c.pipeline.groups.origin = field<int>(g, "groups", "origin");
  return c;
}

}  // namespace ordcon
