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

#include "ordcon/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <utility>

#include "ordcon/errors.hpp"

namespace ordcon {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("loss.tau: must be > 0");
  if (!(lambda_metric >= 0.0)) throw ConfigError("loss.lambda_metric: must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("loss.gamma: must be > 0");
  if (!use_order && lambda_metric == 0.0) {
    throw ConfigError("loss.use_order: disabling the order term needs lambda_metric > 0");
  }
}

namespace {

ad::Var zero_like(ad::Var z) { return z.tape()->constant(Tensor::scalar(0.0)); }

void check_batch(const char* op, ad::Var z, std::size_t n_labels, std::size_t min_n) {
  const Shape& s = z.shape();
  if (s.size() != 2 || s[0] != n_labels) {
    throw ShapeError(std::string(op) + ": features " + shape_str(s) + " vs " +
                     std::to_string(n_labels) + " labels");
  }
  if (n_labels < min_n) {
    throw ShapeError(std::string(op) + ": batch needs at least " + std::to_string(min_n) +
                     " samples");
  }
}

// Shared body of the progressive and regressive losses.
ad::Var order_term(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                   const LossConfig& cfg, Relation rel) {
  const std::size_t n = labels.size();
  check_batch(rel == Relation::kProgressive ? "progressive_loss" : "regressive_loss", z, n, 2);

  // reference directions depend only on labels; compute each distinct one once
  std::map<std::pair<int, int>, std::size_t> slot;
  std::vector<std::size_t> dir_a, dir_b;
  auto direction_slot = [&](std::pair<int, int> ab) {
    auto [it, fresh] = slot.try_emplace(ab, dir_a.size());
    if (fresh) {
      dir_a.push_back(bank.bank->row_of(ab.first));
      dir_b.push_back(bank.bank->row_of(ab.second));
    }
    return it->second;
  };

  std::vector<std::size_t> anchor, partner, fwd, bwd;
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (relation(labels[i], labels[j]) != rel) continue;
      ReferencePairs refs = reference_pairs(labels[i], labels[j], rel);
      if (rel == Relation::kRegressive && cfg.mirror_regressive_backward) {
        std::swap(refs.backward.first, refs.backward.second);
      }
      anchor.push_back(i);
      partner.push_back(j);
      fwd.push_back(direction_slot(refs.forward));
      bwd.push_back(direction_slot(refs.backward));
      ++count[i];
    }
  }
  if (anchor.empty()) return zero_like(z);

  const ad::Var& c = bank.proxies;
  ad::Var vd = ad::l2_normalize(ad::gather(z, anchor) - ad::gather(z, partner));
  ad::Var dirs = ad::l2_normalize(ad::gather(c, dir_a) - ad::gather(c, dir_b));
  ad::Var sf = ad::scale(ad::row_dot(ad::gather(dirs, fwd), vd), 1.0 / cfg.tau);
  ad::Var sb = ad::scale(ad::row_dot(ad::gather(dirs, bwd), vd), 1.0 / cfg.tau);

  const bool progressive = rel == Relation::kProgressive;
  ad::Var num = progressive ? sf : sb;
  ad::Var den_src = progressive ? sb : sf;
  ad::Var den = ad::gather(ad::segment_sum(ad::exp(den_src), anchor, n), anchor);
  if (cfg.include_positive_in_denominator) den = den + ad::exp(num);
  ad::Var log_q = num - ad::log(den);

  std::vector<double> p(anchor.size());
  for (std::size_t k = 0; k < anchor.size(); ++k) p[k] = 1.0 / static_cast<double>(count[anchor[k]]);
  ad::Var weights = z.tape()->constant(Tensor::vector(std::move(p)));
  return -ad::sum(weights * log_q);
}

std::vector<int> negatives_of(const ProxyBank& bank, int y) {
  std::vector<int> out;
  for (int a = bank.assignable_lo(); a <= bank.assignable_hi(); ++a) {
    if (a != y) out.push_back(a);
  }
  return out;
}

}  // namespace

ad::Var direction_vector(ad::Var z_i, ad::Var z_j) {
  if (z_i.shape() != z_j.shape() || z_i.value().rank() != 1) {
    throw ShapeError("direction_vector: expected two vectors of equal dim");
  }
  ad::Var diff = z_i - z_j;
  double s = 0.0;
  for (double v : diff.value().values()) s += v * v;
  if (!(std::sqrt(s) > ad::kNormFloor)) {
    throw DomainError("direction_vector: coincident features");
  }
  return ad::l2_normalize(diff);
}

ad::Var progressive_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                         const LossConfig& cfg) {
  return order_term(z, labels, bank, cfg, Relation::kProgressive);
}

ad::Var regressive_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                        const LossConfig& cfg) {
  return order_term(z, labels, bank, cfg, Relation::kRegressive);
}

ad::Var order_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                   const LossConfig& cfg) {
  return progressive_loss(z, labels, bank, cfg) + regressive_loss(z, labels, bank, cfg);
}

double soft_weight(int y, int z, std::span<const int> negatives) {
  if (negatives.empty()) throw DomainError("soft_weight: empty negative label set");
  if (std::find(negatives.begin(), negatives.end(), z) == negatives.end()) {
    throw DomainError("soft_weight: label " + std::to_string(z) + " not in the negative set");
  }
  int max_diff = 0;
  for (int zp : negatives) max_diff = std::max(max_diff, std::abs(y - zp));
  if (max_diff == 0) throw DomainError("soft_weight: zero maximum label difference");
  const double r = static_cast<double>(std::abs(y - z)) / static_cast<double>(max_diff);
  return 1.0 / (1.0 + std::exp(-r));
}

ad::Var proxy_match_terms(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                          const LossConfig& cfg) {
  const std::size_t n = labels.size();
  check_batch("proxy_match_terms", z, n, 1);
  const ProxyBank& pb = *bank.bank;
  const int lo = pb.assignable_lo();
  const std::size_t n_labels = static_cast<std::size_t>(pb.assignable_hi() - lo + 1);
  if (n_labels < 2) throw DomainError("proxy matching: needs at least two assignable labels");

  std::vector<std::size_t> rows(n_labels), own(n);
  for (std::size_t a = 0; a < n_labels; ++a) rows[a] = pb.row_of(lo + static_cast<int>(a));
  Tensor w = Tensor::zeros({n, n_labels});
  for (std::size_t i = 0; i < n; ++i) {
    own[i] = pb.assign_row(labels[i]) - rows[0];
    const std::vector<int> neg = cfg.soft_weights ? negatives_of(pb, labels[i]) : std::vector<int>{};
    for (std::size_t a = 0; a < n_labels; ++a) {
      if (a == own[i]) continue;
      w.at(i, a) = cfg.soft_weights ? soft_weight(labels[i], lo + static_cast<int>(a), neg) : 1.0;
    }
  }

  ad::Var zn = ad::l2_normalize(z);
  ad::Var cn = ad::l2_normalize(ad::gather(bank.proxies, rows));
  ad::Var e = ad::exp(ad::scale(ad::matmul(zn, ad::transpose(cn)), 1.0 / cfg.tau));
  ad::Var num = ad::pick(e, own);
  ad::Var den = ad::row_sum(e * z.tape()->constant(std::move(w)));
  return num / den;
}

ad::Var proxy_match_term(ad::Var z, int y, const BoundBank& bank, const LossConfig& cfg) {
  if (z.value().rank() != 1) throw ShapeError("proxy_match_term: expected a feature vector");
  ad::Var row = ad::reshape(z, {1, z.value().size()});
  const int labels[] = {y};
  return ad::reshape(proxy_match_terms(row, labels, bank, cfg), {});
}

ad::Var metric_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                    const LossConfig& cfg) {
  ad::Var terms = proxy_match_terms(z, labels, bank, cfg);
  if (cfg.log_ratio) terms = ad::log(terms);
  return -ad::mean(terms);
}

ContrastTerms contrast_terms(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                             const LossConfig& cfg) {
  check_batch("contrast_loss", z, labels.size(), 2);
  ContrastTerms t;
  if (cfg.use_order) t.order = order_loss(z, labels, bank, cfg);
  if (cfg.lambda_metric != 0.0) t.metric = metric_loss(z, labels, bank, cfg);
  if (t.order.valid() && t.metric.valid()) {
    t.total = t.order + ad::scale(t.metric, cfg.lambda_metric);
  } else if (t.order.valid()) {
    t.total = t.order;
  } else if (t.metric.valid()) {
    t.total = ad::scale(t.metric, cfg.lambda_metric);
  } else {
    t.total = zero_like(z);
  }
  return t;
}

ad::Var contrast_loss(ad::Var z, std::span<const int> labels, const BoundBank& bank,
                      const LossConfig& cfg) {
  return contrast_terms(z, labels, bank, cfg).total;
}

ad::Var age_l1_loss(ad::Var preds, std::span<const double> labels) {
  if (preds.value().rank() != 1 || preds.value().size() != labels.size()) {
    throw ShapeError("age_l1_loss: " + std::to_string(preds.value().size()) +
                     " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ShapeError("age_l1_loss: empty batch");
  ad::Var target = preds.tape()->constant(Tensor::vector({labels.begin(), labels.end()}));
  return ad::mean(ad::abs(preds - target));
}

ad::Var identity_contrastive_loss(ad::Var z_id, std::span<const int> ids, const LossConfig& cfg) {
  const std::size_t n = ids.size();
  check_batch("identity_contrastive_loss", z_id, n, 2);
  const bool self = cfg.include_self_in_identity;

  Tensor mask = Tensor::zeros({n, n});
  Tensor p = Tensor::zeros({n, n});
  std::vector<double> has_pos(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool counted = j != i || self;
      mask.at(i, j) = counted ? 1.0 : 0.0;
      if (counted && ids[i] == ids[j]) ++cnt;
    }
    if (cnt == 0) continue;
    has_pos[i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((j != i || self) && ids[i] == ids[j]) p.at(i, j) = 1.0 / static_cast<double>(cnt);
    }
  }

  ad::Tape& tape = *z_id.tape();
  ad::Var zn = ad::l2_normalize(z_id);
  ad::Var s = ad::scale(ad::matmul(zn, ad::transpose(zn)), 1.0 / cfg.tau);
  ad::Var den = ad::row_sum(ad::exp(s) * tape.constant(std::move(mask)));
  ad::Var positive = ad::sum(s * tape.constant(std::move(p)));
  ad::Var normaliser = ad::sum(ad::log(den) * tape.constant(Tensor::vector(std::move(has_pos))));
  return normaliser - positive;
}

double grl_lambda(double t, double gamma) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("grl_lambda: progress t=" + std::to_string(t) + " outside [0, 1]");
  }
  if (!(gamma > 0.0)) throw DomainError("grl_lambda: gamma must be > 0");
  return 2.0 / (1.0 + std::exp(-gamma * t)) - 1.0;
}

}  // namespace ordcon
