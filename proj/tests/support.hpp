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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ordcon/autodiff.hpp"
#include "ordcon/model.hpp"
#include "ordcon/objectives.hpp"
#include "ordcon/proxy_bank.hpp"

namespace testing {

using ordcon::Tensor;

inline Tensor to_tensor(const oracle::Mat& m) {
  std::vector<double> v;
  for (const auto& r : m) v.insert(v.end(), r.begin(), r.end());
  return Tensor::matrix(m.size(), m.empty() ? 0 : m[0].size(), std::move(v));
}

inline ordcon::ProxyBank to_bank(const oracle::Bank& b) { return ordcon::ProxyBank(b.lo, to_tensor(b.c)); }

// A random batch with its proxy bank, small enough for the scalar oracles.
struct RandomBatch {
  oracle::Mat z;
  std::vector<int> labels;
  std::vector<int> ids;
  oracle::Bank bank;
};

inline RandomBatch random_batch(std::mt19937_64& rng, std::size_t max_n = 6, std::size_t max_dim = 4) {
  std::uniform_int_distribution<std::size_t> pick_n(2, max_n), pick_d(1, max_dim);
  std::uniform_int_distribution<int> age(20, 24), who(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  RandomBatch b;
  const std::size_t n = pick_n(rng);
  const std::size_t d = pick_d(rng);
  for (std::size_t i = 0; i < n; ++i) {
    oracle::Vec row(d);
    for (double& v : row) v = normal(rng);
    b.z.push_back(row);
    b.labels.push_back(age(rng));
    b.ids.push_back(who(rng));
  }
  b.bank.lo = 19;
  for (int a = 19; a <= 25; ++a) {
    oracle::Vec row(d);
    for (double& v : row) v = normal(rng);
    b.bank.c.push_back(row);
  }
  return b;
}

inline ordcon::LossConfig to_config(const oracle::Options& o) {
  ordcon::LossConfig c;
  c.tau = o.tau;
  c.include_positive_in_denominator = o.include_positive;
  c.mirror_regressive_backward = o.mirror_regressive;
  c.soft_weights = o.soft;
  c.log_ratio = o.log_ratio;
  c.include_self_in_identity = o.identity_self;
  c.lambda_metric = o.lambda;
  return c;
}

using BatchLoss = std::function<ordcon::ad::Var(ordcon::ad::Var z, const ordcon::BoundBank&,
                                                const RandomBatch&, const ordcon::LossConfig&)>;

inline double evaluate(const RandomBatch& b, const oracle::Options& o, const BatchLoss& f) {
  ordcon::ad::Tape tape;
  const ordcon::ProxyBank bank = to_bank(b.bank);
  const ordcon::BoundBank bb = ordcon::BoundBank::bind(tape, bank, true);
  ordcon::ad::Var z = tape.param(to_tensor(b.z));
  return f(z, bb, b, to_config(o)).value().item();
}

// A library loss and its scalar oracle.
struct LossPair {
  std::string name;
  BatchLoss library;
  std::function<double(const RandomBatch&, const oracle::Options&)> reference;
};

inline std::vector<LossPair> loss_pairs() {
  using ordcon::ad::Var;
  using ordcon::BoundBank;
  using ordcon::LossConfig;
  std::vector<LossPair> out;
  out.push_back({"progressive",
                 [](Var z, const BoundBank& bb, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::progressive_loss(z, b.labels, bb, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::progressive(b.z, b.labels, b.bank, o);
                 }});
  out.push_back({"regressive",
                 [](Var z, const BoundBank& bb, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::regressive_loss(z, b.labels, bb, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::regressive(b.z, b.labels, b.bank, o);
                 }});
  out.push_back({"order",
                 [](Var z, const BoundBank& bb, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::order_loss(z, b.labels, bb, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::order(b.z, b.labels, b.bank, o);
                 }});
  out.push_back({"metric",
                 [](Var z, const BoundBank& bb, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::metric_loss(z, b.labels, bb, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::metric(b.z, b.labels, b.bank, o);
                 }});
  out.push_back({"contrast",
                 [](Var z, const BoundBank& bb, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::contrast_loss(z, b.labels, bb, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::contrast(b.z, b.labels, b.bank, o);
                 }});
  out.push_back({"identity",
                 [](Var z, const BoundBank&, const RandomBatch& b, const LossConfig& c) {
                   return ordcon::identity_contrastive_loss(z, b.ids, c);
                 },
                 [](const RandomBatch& b, const oracle::Options& o) {
                   return oracle::identity(b.z, b.ids, o);
                 }});
  out.push_back({"age_l1",
                 [](Var z, const BoundBank&, const RandomBatch& b, const LossConfig&) {
                   // first feature column as the prediction
                   std::vector<double> y(b.labels.begin(), b.labels.end());
                   ordcon::ad::Tape& t = *z.tape();
                   std::vector<double> e(b.z[0].size(), 0.0);
                   e[0] = 1.0;
                   Var w = t.constant(Tensor::matrix(e.size(), 1, e));
                   Var bias = t.constant(Tensor::scalar(20.0));
                   return ordcon::age_l1_loss(ordcon::predict_age(z, w, bias), y);
                 },
                 [](const RandomBatch& b, const oracle::Options&) {
                   oracle::Vec p, y;
                   for (std::size_t i = 0; i < b.z.size(); ++i) {
                     p.push_back(b.z[i][0] + 20.0);
                     y.push_back(b.labels[i]);
                   }
                   return oracle::l1(p, y);
                 }});
  return out;
}

// Option variants every loss is compared under.
inline std::vector<oracle::Options> option_variants() {
  std::vector<oracle::Options> v;
  oracle::Options base;
  v.push_back(base);
  oracle::Options a = base;
  a.tau = 1.0;
  a.soft = false;
  a.include_positive = true;
  v.push_back(a);
  oracle::Options b = base;
  b.mirror_regressive = false;
  b.log_ratio = true;
  b.identity_self = true;
  b.tau = 0.5;
  v.push_back(b);
  return v;
}

// Max |library - oracle| over `batches` random batches and every variant.
struct Equivalence {
  std::string worst_loss;
  double max_abs_error = 0.0;
  // error relative to max(1, |oracle|)
  double max_scaled_error = 0.0;
};

inline Equivalence brute_force_equivalence(std::uint64_t seed, int batches) {
  std::mt19937_64 rng(seed);
  Equivalence e;
  const auto pairs = loss_pairs();
  const auto variants = option_variants();
  for (int t = 0; t < batches; ++t) {
    const RandomBatch b = random_batch(rng);
    for (const auto& o : variants) {
      for (const auto& p : pairs) {
        const double ref = p.reference(b, o);
        const double err = std::abs(evaluate(b, o, p.library) - ref);
        e.max_scaled_error = std::max(e.max_scaled_error, err / std::max(1.0, std::abs(ref)));
        if (err > e.max_abs_error || e.worst_loss.empty()) {
          e.max_abs_error = err;
          e.worst_loss = p.name;
        }
      }
    }
  }
  return e;
}

}  // namespace testing
