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

// The ordinal contrastive objective stack. Every loss returns a single-value
// Var on the tape of its feature input, so gradients reach the features, the
// proxies and everything upstream (encoder parameters, GRL nodes).
//
// Feature batches are (N x d) matrices; labels are parallel integer arrays.

#include <span>
#include <vector>

#include "ordcon/autodiff.hpp"
#include "ordcon/proxy_bank.hpp"

namespace ordcon {

struct LossConfig {
  double tau = 0.1;            // temperature
  double lambda_metric = 0.8;  // weight of the metric term in the contrast loss
  double gamma = 10.0;         // growth rate of the GRL schedule
  bool soft_weights = true;    // age-difference weights on metric negatives
  // Metric term uses log(ratio) instead of the raw ratio.
  bool log_ratio = false;
  // Order-loss denominators also include the pair's own numerator term.
  bool include_positive_in_denominator = false;
  // Identity loss keeps k == i in the softmax and j == i as a positive.
  bool include_self_in_identity = false;
  // Ablation switch: drop the order term from the contrast loss.
  bool use_order = true;
  // Regressive backward reference v(c_{y_i}, c_{y_j}) instead of
  // v(c_{y_j}, c_{y_i}), so both order terms reward the same arrangement.
  bool mirror_regressive_backward = true;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

// (z_i - z_j) / |z_i - z_j|; DomainError when the features coincide.
ad::Var direction_vector(ad::Var z_i, ad::Var z_j);

// -sum_i sum_j p(i<j) log q(i<j) over pairs with y_i < y_j. p is uniform over
// each anchor's progressive partners; q's denominator runs over the same
// partners with the backward reference direction.
ad::Var progressive_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                         const LossConfig& cfg);
// Mirror image over pairs with y_i > y_j: numerator on the backward
// reference, denominator on the forward one.
ad::Var regressive_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                        const LossConfig& cfg);
ad::Var order_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                   const LossConfig& cfg);

// 1 / (1 + exp(-|y - z| / max_{z' in negatives} |y - z'|)).
double soft_weight(int y, int z, std::span<const int> negatives);

// exp(sim(z, c_y)/tau) / sum_{z' != y} w(y, z') exp(sim(z, c_z')/tau), with w = 1
// unless cfg.soft_weights. Negatives are the assignable labels other than y.
ad::Var proxy_match_term(ad::Var z, int y, const BoundBank& bank, const LossConfig& cfg);
// Batched form: (N x d) -> (N).
ad::Var proxy_match_terms(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                          const LossConfig& cfg);
// -(1/N) sum_i term_i, term = ratio or log(ratio).
ad::Var metric_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                    const LossConfig& cfg);

struct ContrastTerms {
  ad::Var total;
  ad::Var order;   // invalid when cfg.use_order is false
  ad::Var metric;  // invalid when lambda_metric == 0
};

// order + lambda * metric
ContrastTerms contrast_terms(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                             const LossConfig& cfg);
ad::Var contrast_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                      const LossConfig& cfg);

// (1/N) sum |pred - label|; subgradient 0 at a zero residual.
ad::Var age_l1_loss(ad::Var preds, std::span<const double> labels);

// Multi-positive contrastive loss on L2-normalised identity features.
ad::Var identity_contrastive_loss(ad::Var z_id, std::span<const int> ids, const LossConfig& cfg);

// 2 / (1 + exp(-gamma t)) - 1 for t in [0, 1].
double grl_lambda(double t, double gamma);

}  // namespace ordcon
