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

#pragma once

// Run configuration: every knob of a pipeline run in one JSON document.
//
//   { "seed": 0,
//     "data":   { SyntheticSpec fields },
//     "model":  { hidden_dims, d_age, d_id, activation },
//     "train":  { TrainConfig fields },
//     "loss":   { LossConfig fields },
//     "groups": { granularity, origin } }
//
// Resolution order: mode defaults, then the user's file, then dotted-key
// overrides ("train.lr=0.01"). Seeds that are still unset afterwards are
// derived from the root "seed", so the resolved document alone reproduces a
// run.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ordcon/synthdata.hpp"
#include "ordcon/train.hpp"

namespace ordcon {

struct RunConfig {
  std::uint64_t seed = 0;
  SyntheticSpec data;
  PipelineConfig pipeline;
};

nlohmann::json default_config_json(BatchMode mode);

nlohmann::json to_json(const RunConfig& cfg);
// Expects a fully resolved document (see resolve_config).
RunConfig run_config_from_json(const nlohmann::json& j);

// Applies "a.b.c" = value to `j`. The value is parsed as JSON when possible
// (numbers, booleans, arrays) and taken as a string otherwise. Unknown keys
// are a ConfigError.
void apply_override(nlohmann::json& j, const std::string& dotted_key, const std::string& value);

struct ConfigSources {
  nlohmann::json file = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<BatchMode> forced_mode;
};

// Merges the sources, derives missing seeds and validates every section.
// Returns the resolved document; throws ConfigError naming the bad field.
nlohmann::json resolve_config(const ConfigSources& sources);

// Named ablations: "full", "order-only", "metric-only", "hard-metric".
void apply_ablation(nlohmann::json& j, const std::string& name);

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

std::string to_string(BatchMode m);
BatchMode parse_mode(const std::string& s);

}  // namespace ordcon
