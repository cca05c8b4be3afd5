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
#include <span>
#include <vector>

#include "ordcon/proxy_bank.hpp"
#include "ordcon/tensor.hpp"

namespace ordcon {

double mae(std::span<const double> preds, std::span<const double> labels);

// Over ordered progressive pairs (y_i < y_j): fraction where the pair's
// direction vector is closer in cosine to the forward reference direction
// than to the backward one. Throws DomainError without any progressive pair.
double order_consistency(const Tensor& features, std::span<const int> labels,
                         const ProxyBank& bank);

// Fraction of probes whose cosine-nearest gallery item shares the identity.
// Ties go to the lowest gallery index.
double rank1_accuracy(const Tensor& gallery, std::span<const int> gallery_ids,
                      const Tensor& probe, std::span<const int> probe_ids);

// Held-out accuracy of a linear softmax classifier predicting `groups` from
// `features`. The split is stratified 50/50 per group; the classifier is
// trained by full-batch gradient descent on standardised features. Argmax
// ties resolve to the lowest class index.
double age_probe_accuracy(const Tensor& features, std::span<const int> groups, std::uint64_t seed);

struct PcaResult {
  Tensor projected;                       // (n x k)
  std::vector<double> explained_ratio;    // k entries
  Tensor components;                      // (k x d)
  std::vector<double> mean;               // d entries
};

// Top-k principal directions of the centred features. Each component is
// signed so its largest-magnitude coordinate is positive. Components with
// (numerically) zero variance are zeroed.
PcaResult pca_project(const Tensor& features, std::size_t k);

// Spearman rank correlation, average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace ordcon
