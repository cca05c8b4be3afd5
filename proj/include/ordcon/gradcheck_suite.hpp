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

#include <cstdint>
#include <string>
#include <vector>

namespace ordcon {

struct GradcheckSuiteOptions {
  int seeds = 20;
  std::uint64_t root_seed = 0;
  double tolerance = 1e-5;
  // Five-point central differences; the raw-ratio losses at tau 0.1 are too
  // curved for the two-point stencil at any single step size.
  double eps = 3e-4;
  bool five_point = true;
  // Negates the analytic gradient of the named check (negative control).
  std::string flip_check;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  int worst_seed = 0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool passed() const;
};

// Names of the checks in run order.
std::vector<std::string> gradcheck_names();

// Every loss against features, proxies and encoder parameters, plus the
// encoder forward pass and the GRL path, on random batches of 4 to 8 samples.
GradcheckReport run_gradcheck_suite(const GradcheckSuiteOptions& options);

}  // namespace ordcon
