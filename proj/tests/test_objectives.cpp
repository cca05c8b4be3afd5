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

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ordcon/errors.hpp"
#include "ordcon/objectives.hpp"
#include "support.hpp"

using namespace ordcon;

namespace {

const double kE2 = std::exp(2.0);

ProxyBank line_bank(int lo, int hi) {
  std::vector<double> vals;
  for (int a = lo; a <= hi; ++a) vals.push_back(a);
  return ProxyBank(lo, Tensor::matrix(vals.size(), 1, vals));
}

LossConfig tau_one() {
  LossConfig c;
  c.tau = 1.0;
  return c;
}

// Evaluates `f` on features z with bank b bound as trainable.
template <class F>
double eval(const ProxyBank& b, const Tensor& z, F f) {
  ad::Tape t;
  const BoundBank bb = BoundBank::bind(t, b, true);
  return f(t.param(z), bb).value().item();
}

// Two assignable labels 1 and 2; proxies point along +x and -x.
ProxyBank two_label_bank() { return ProxyBank(0, Tensor::matrix({{0, 1}, {1, 0}, {-1, 0}, {0, -1}})); }

}  // namespace

TEST_CASE("direction_vector") {
  ad::Tape t;
  auto v = [&](std::vector<double> a, std::vector<double> b) {
    return direction_vector(t.constant(Tensor::vector(a)), t.constant(Tensor::vector(b))).value().values();
  };
  CHECK(v({3, 4}, {0, 0}) == std::vector<double>{0.6, 0.8});
  const auto ab = v({1, 2, -1}, {0.5, 0, 3});
  const auto ba = v({0.5, 0, 3}, {1, 2, -1});
  for (std::size_t k = 0; k < 3; ++k) CHECK(ab[k] == -ba[k]);
  CHECK_THROWS_AS(v({1, 1}, {1, 1}), DomainError);
}

TEST_CASE("progressive loss, 1-dim two-sample instance") {
  const ProxyBank b = line_bank(19, 31);
  const std::vector<int> y = {20, 30};
  const double loss = eval(b, Tensor::matrix({{0}, {1}}),
                           [&](ad::Var z, const BoundBank& bb) { return progressive_loss(z, y, bb, tau_one()); });
  CHECK(std::abs(loss - -2.0) < 1e-10);
}

TEST_CASE("regressive loss on the swapped instance") {
  const ProxyBank b = line_bank(19, 31);
  const std::vector<int> y = {30, 20};
  const Tensor z = Tensor::matrix({{1}, {0}});
  LossConfig mirrored = tau_one();
  LossConfig literal = tau_one();
  literal.mirror_regressive_backward = false;
  const double m = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return regressive_loss(v, y, bb, mirrored); });
  const double l = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return regressive_loss(v, y, bb, literal); });
  CHECK(std::abs(m - -2.0) < 1e-10);
  // literal backward reference equals the forward one here, so q = 1
  CHECK(std::abs(l) < 1e-12);
}

TEST_CASE("order losses vanish on equal ages") {
  std::mt19937_64 rng(1);
  const ProxyBank b = init_proxies(std::vector<int>{40}, 3, 2);
  const std::vector<int> y = {40, 40, 40, 40};
  std::normal_distribution<double> n;
  Tensor z = Tensor::zeros({4, 3});
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = n(rng);
  const LossConfig c;
  CHECK(eval(b, z, [&](ad::Var v, const BoundBank& bb) { return progressive_loss(v, y, bb, c); }) == 0.0);
  CHECK(eval(b, z, [&](ad::Var v, const BoundBank& bb) { return regressive_loss(v, y, bb, c); }) == 0.0);
  CHECK(eval(b, z, [&](ad::Var v, const BoundBank& bb) { return order_loss(v, y, bb, c); }) == 0.0);
}

TEST_CASE("order loss is the sum of its parts and translation invariant") {
  std::mt19937_64 rng(5);
  const LossConfig c;
  for (int trial = 0; trial < 20; ++trial) {
    const testing::RandomBatch rb = testing::random_batch(rng, 6, 4);
    const ProxyBank b = testing::to_bank(rb.bank);
    Tensor z = testing::to_tensor(rb.z);
    const double p = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return progressive_loss(v, rb.labels, bb, c); });
    const double r = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return regressive_loss(v, rb.labels, bb, c); });
    const double o = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return order_loss(v, rb.labels, bb, c); });
    CHECK(o == p + r);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t k = 0; k < z.cols(); ++k) z.at(i, k) += 2.5 - 0.75 * double(k);
    const double shifted = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return order_loss(v, rb.labels, bb, c); });
    CHECK(std::abs(shifted - o) < 1e-9);
  }
}

TEST_CASE("order loss decreases as the pair aligns with the forward reference") {
  // v_f = -e1, v_b = -e2 for the progressive pair (20, 21); the regressive
  // forward reference is -e3.
  const ProxyBank b(19, Tensor::matrix({{0, 1, 0}, {0, 0, 0}, {1, 0, 0}, {1, 0, 1}}));
  const std::vector<int> y = {20, 21};
  const LossConfig c;
  const double beta = 0.3;
  double prev = INFINITY;
  for (int s = 0; s <= 16; ++s) {
    const double alpha = 0.05 * s;
    const double gamma = std::sqrt(1 - alpha * alpha - beta * beta);
    const Tensor z = Tensor::matrix({{-alpha, -beta, gamma}, {0, 0, 0}});
    const double loss = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return order_loss(v, y, bb, c); });
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("include_positive_in_denominator bounds q by one") {
  const ProxyBank b = line_bank(19, 31);
  const std::vector<int> y = {20, 30};
  LossConfig c = tau_one();
  c.include_positive_in_denominator = true;
  const double loss = eval(b, Tensor::matrix({{0}, {1}}),
                           [&](ad::Var z, const BoundBank& bb) { return progressive_loss(z, y, bb, c); });
  CHECK(loss == doctest::Approx(std::log(1 + kE2) - 2.0).epsilon(1e-14));
  CHECK(loss > 0);
}

TEST_CASE("soft_weight") {
  const std::vector<int> neg = {10, 12, 14};
  CHECK(soft_weight(10, 14, std::vector<int>{12, 14}) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  CHECK(soft_weight(10, 12, std::vector<int>{12, 14}) == doctest::Approx(0.6224593312018546).epsilon(1e-15));
  CHECK(soft_weight(11, 12, neg) < soft_weight(11, 14, neg));
  CHECK_THROWS_AS(soft_weight(10, 12, std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(soft_weight(10, 13, neg), DomainError);
  CHECK_THROWS_AS(soft_weight(12, 12, std::vector<int>{12}), DomainError);

  // with equal similarities, a farther proxy weighs more in the denominator
  for (int y = 20; y <= 30; ++y) {
    std::vector<int> others;
    for (int a = 20; a <= 30; ++a)
      if (a != y) others.push_back(a);
    for (int near : others)
      for (int far : others)
        if (std::abs(y - near) < std::abs(y - far)) CHECK(soft_weight(y, near, others) < soft_weight(y, far, others));
  }
}

TEST_CASE("proxy matching, two-proxy cases") {
  const ProxyBank b = two_label_bank();
  LossConfig hard = tau_one();
  hard.soft_weights = false;
  LossConfig soft = tau_one();
  auto term = [&](std::vector<double> z, const LossConfig& c) {
    return eval(b, Tensor::vector(z), [&](ad::Var v, const BoundBank& bb) { return proxy_match_term(v, 1, bb, c); });
  };
  CHECK(std::abs(term({2, 0}, hard) - kE2) < 1e-10);
  CHECK(std::abs(term({2, 0}, soft) - kE2 / 0.7310585786300049) < 1e-10);
  CHECK(term({2, 0}, soft) == doctest::Approx(10.107).epsilon(1e-4));
  CHECK(std::abs(term({0, 3}, hard) - 1.0) < 1e-12);

  const double single = eval(b, Tensor::matrix({{2, 0}}), [&](ad::Var v, const BoundBank& bb) {
    return metric_loss(v, std::vector<int>{1}, bb, hard);
  });
  CHECK(std::abs(single - -kE2) < 1e-10);
  const double three = eval(b, Tensor::matrix({{2, 0}, {2, 0}, {2, 0}}), [&](ad::Var v, const BoundBank& bb) {
    return metric_loss(v, std::vector<int>{1, 1, 1}, bb, hard);
  });
  CHECK(three == doctest::Approx(single).epsilon(1e-15));
}

TEST_CASE("proxy matching excludes sentinels and needs two labels") {
  const ProxyBank one(0, Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}}));
  const LossConfig c;
  CHECK_THROWS_AS(eval(one, Tensor::vector({1, 1}),
                       [&](ad::Var v, const BoundBank& bb) { return proxy_match_term(v, 1, bb, c); }),
                  DomainError);
  CHECK_THROWS_AS(eval(two_label_bank(), Tensor::vector({1, 1}),
                       [&](ad::Var v, const BoundBank& bb) { return proxy_match_term(v, 0, bb, c); }),
                  DomainError);
}

TEST_CASE("contrast loss") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const testing::RandomBatch rb = testing::random_batch(rng, 6, 4);
    const ProxyBank b = testing::to_bank(rb.bank);
    const Tensor z = testing::to_tensor(rb.z);
    auto with = [&](double lambda) {
      LossConfig c;
      c.lambda_metric = lambda;
      return eval(b, z, [&](ad::Var v, const BoundBank& bb) { return contrast_loss(v, rb.labels, bb, c); });
    };
    const LossConfig c;
    const double order = eval(b, z, [&](ad::Var v, const BoundBank& bb) { return order_loss(v, rb.labels, bb, c); });
    CHECK(with(0.0) == order);
    CHECK(std::abs(with(0.3) + with(0.5) - with(0.0) - with(0.8)) < 1e-10 * std::max(1.0, std::abs(with(0.8))));
  }
}

TEST_CASE("age_l1_loss") {
  ad::Tape t;
  auto l1 = [&](std::vector<double> p, std::vector<double> y) {
    return age_l1_loss(t.constant(Tensor::vector(p)), y).value().item();
  };
  CHECK(l1({20, 30}, {20, 30}) == 0.0);
  CHECK(l1({20, 30}, {22, 27}) == 2.5);
  CHECK_THROWS_AS(l1({1, 2}, {1}), ShapeError);
  ad::Tape g;
  ad::Var p = g.param(Tensor::vector({20, 31}));
  const std::vector<double> y = {20, 30};
  g.backward(age_l1_loss(p, y));
  CHECK(g.grad(p).values() == std::vector<double>{0, 0.5});
}

TEST_CASE("identity contrastive loss closed forms") {
  const LossConfig c = tau_one();
  ad::Tape t;
  const double pair =
      identity_contrastive_loss(t.param(Tensor::matrix({{1, 0}, {1, 0}})), std::vector<int>{3, 3}, c).value().item();
  CHECK(std::abs(pair) < 1e-15);
  const double four = identity_contrastive_loss(t.param(Tensor::matrix({{0, 2}, {0, 2}, {0, 2}, {0, 2}})),
                                                std::vector<int>{0, 0, 1, 1}, c)
                          .value()
                          .item();
  CHECK(four == doctest::Approx(4 * std::log(3.0)).epsilon(1e-14));
  const double lonely =
      identity_contrastive_loss(t.param(Tensor::matrix({{1, 0}, {0, 1}})), std::vector<int>{0, 1}, c).value().item();
  CHECK(lonely == 0.0);
}

TEST_CASE("identity loss is permutation invariant") {
  std::mt19937_64 rng(2);
  const LossConfig c;
  for (int trial = 0; trial < 20; ++trial) {
    testing::RandomBatch rb = testing::random_batch(rng, 6, 4);
    ad::Tape t;
    const double base = identity_contrastive_loss(t.param(testing::to_tensor(rb.z)), rb.ids, c).value().item();
    std::vector<std::size_t> perm(rb.z.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Mat z;
    std::vector<int> ids;
    for (std::size_t i : perm) {
      z.push_back(rb.z[i]);
      ids.push_back(rb.ids[i]);
    }
    const double permuted = identity_contrastive_loss(t.param(testing::to_tensor(z)), ids, c).value().item();
    CHECK(std::abs(permuted - base) < 1e-9);
  }
}

TEST_CASE("grl_lambda") {
  CHECK(grl_lambda(0.0, 10.0) == 0.0);
  CHECK(std::abs(grl_lambda(1.0, 10.0) - (2.0 / (1.0 + std::exp(-10.0)) - 1.0)) < 1e-12);
  CHECK(grl_lambda(1.0, 10.0) == doctest::Approx(0.99991).epsilon(1e-5));
  CHECK(grl_lambda(0.1, 10.0) == doctest::Approx(0.46212).epsilon(1e-5));
  double prev = -1;
  for (int k = 0; k < 1000; ++k) {
    const double v = grl_lambda(k / 999.0, 10.0);
    CHECK(v >= prev);
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    prev = v;
  }
  CHECK_THROWS_AS(grl_lambda(-0.1, 10.0), DomainError);
  CHECK_THROWS_AS(grl_lambda(1.1, 10.0), DomainError);
}

TEST_CASE("every loss matches its scalar oracle") {
  const testing::Equivalence e = testing::brute_force_equivalence(2024, 50);
  INFO("worst: " << e.worst_loss << " " << e.max_abs_error << " scaled " << e.max_scaled_error);
  // raw ratios reach 1e8 at tau 0.1, where one ulp is above 1e-9
  CHECK(e.max_scaled_error < 1e-12);
}

TEST_CASE("order loss matches the oracle on a three-sample batch") {
  const oracle::Bank ob{19, {{0.2, 1.0}, {1.0, 0.1}, {0.3, -0.8}, {-1.0, 0.4}, {0.5, 0.5}}};
  const oracle::Mat z = {{0.1, 0.9}, {-1.2, 0.3}, {0.7, -0.4}};
  const std::vector<int> y = {21, 20, 22};
  const oracle::Options o;
  const double got = eval(testing::to_bank(ob), testing::to_tensor(z),
                          [&](ad::Var v, const BoundBank& bb) { return order_loss(v, y, bb, LossConfig{}); });
  CHECK(std::abs(got - oracle::order(z, y, ob, o)) < 1e-10);
}

TEST_CASE("contrast loss gradient on a four-sample batch") {
  const ProxyBank b = init_proxies(std::vector<int>{20, 23}, 16, 3);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  Tensor z = Tensor::zeros({4, 16});
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = n(rng);
  const std::vector<int> y = {20, 23, 21, 20};
  const std::vector<Tensor> leaves = {z, b.proxies()};
  auto f = [&](ad::Tape&, std::span<const ad::Var> v) {
    return contrast_loss(v[0], y, BoundBank{&b, v[1]}, LossConfig{});
  };
  CHECK(ad::grad_check(f, leaves, 1e-5) < 1e-5);
}

TEST_CASE("loss config validation") {
  LossConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LossConfig{};
  c.lambda_metric = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LossConfig{};
  c.gamma = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
