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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ordcon/synthdata.hpp"
#include "ordcon/train.hpp"

namespace ordcon {

// Writes to a sibling temp file and renames it over `path`. Missing parent
// directories are created. IoError names the path on failure.
void atomic_write(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// y_age,y_id,z_0..z_{d-1}; one row per sample of `z` (N x d). Header only
// for empty input.
void export_features(const std::filesystem::path& path, const Dataset& d, const Tensor& z);

nlohmann::json metrics_to_json(const Metrics& m);
void export_metrics(const std::filesystem::path& path, const Metrics& m);

// epoch,stage,total,order,metric,identity,l1,grl_lambda
void export_loss_trace(const std::filesystem::path& path, const std::vector<EpochRecord>& trace);

}  // namespace ordcon
