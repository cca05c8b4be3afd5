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
#include <random>

#include "doctest.h"
#include "ordcon/errors.hpp"
#include "ordcon/model.hpp"
#include "ordcon/objectives.hpp"

using namespace ordcon;

namespace {

EncoderSpec small_spec(std::size_t d_id = 3) {
  EncoderSpec s;
  s.input_dim = 5;
  s.hidden_dims = {7, 6};
  s.d_age = 4;
  s.d_id = d_id;
  s.seed = 42;
  return s;
}

Tensor random_input(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Tensor x = Tensor::zeros({n, d});
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = normal(rng);
  return x;
}

}  // namespace

TEST_CASE("init_encoder is deterministic per seed") {
  const EncoderSpec s = small_spec();
  CHECK(init_encoder(s) == init_encoder(s));
  EncoderSpec other = s;
  other.seed = 43;
  CHECK_FALSE(init_encoder(other) == init_encoder(s));
  const EncoderParams p = init_encoder(s);
  CHECK(p.weights.size() == 2);
  CHECK(p.weights[0].shape() == Shape{5, 7});
  CHECK(p.age_head.shape() == Shape{6, 4});
  CHECK(p.id_head.shape() == Shape{6, 3});
  CHECK(p.parameter_count() == 5 * 7 + 7 + 7 * 6 + 6 + 6 * 4 + 6 * 3);
  for (double b : p.biases[0].values()) CHECK(b == 0.0);
  const double bound = 1.0 / std::sqrt(5.0);
  for (double w : p.weights[0].values()) CHECK(std::abs(w) <= bound);
}

TEST_CASE("encoder settings validation") {
  EncoderSpec s = small_spec();
  s.d_age = 0;
  CHECK_THROWS_AS(init_encoder(s), ConfigError);
  s = small_spec();
  s.hidden_dims = {4, 0};
  CHECK_THROWS_AS(init_encoder(s), ConfigError);
  s = small_spec();
  s.input_dim = 0;
  CHECK_THROWS_AS(init_encoder(s), ConfigError);
  CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
  CHECK(parse_activation(to_string(Activation::kRelu)) == Activation::kRelu);
}

TEST_CASE("no hidden layers gives a linear map") {
  EncoderSpec s = small_spec(0);
  s.hidden_dims = {};
  const EncoderParams p = init_encoder(s);
  CHECK(p.weights.empty());
  CHECK(p.age_head.shape() == Shape{5, 4});
  const Tensor x = random_input(3, 5, 1);
  const Features f = encode(s, p, x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double v = 0;
      for (std::size_t j = 0; j < 5; ++j) v += x.at(i, j) * p.age_head.at(j, k);
      CHECK(f.z_age.at(i, k) == doctest::Approx(v).epsilon(1e-14));
    }
}

TEST_CASE("forward shapes and the zero model") {
  const EncoderSpec s = small_spec();
  EncoderParams p = init_encoder(s);
  const Tensor x = random_input(6, 5, 2);
  const Features f = encode(s, p, x);
  CHECK(f.z_age.shape() == Shape{6, 4});
  CHECK(f.z_id.shape() == Shape{6, 3});

  const Features single = encode(s, p, Tensor::matrix(1, 5, x.row(3)));
  for (std::size_t k = 0; k < 4; ++k) CHECK(single.z_age.at(0, k) == f.z_age.at(3, k));

  for (Tensor* t : p.tensors())
    for (std::size_t k = 0; k < t->size(); ++k) (*t)[k] = 0.0;
  const Features zero = encode(s, p, x);
  for (double v : zero.z_age.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(encode(s, p, random_input(2, 4, 0)), ShapeError);
}

TEST_CASE("age-estimation mode has no identity head") {
  const EncoderSpec s = small_spec(0);
  const EncoderParams p = init_encoder(s);
  CHECK(p.id_head.size() == 0);
  ad::Tape t;
  const EncoderOutput out = forward(s, EncoderVars::bind(t, p, false), t.constant(random_input(2, 5, 3)));
  CHECK_FALSE(out.z_id.valid());
}

TEST_CASE("permuting rows permutes outputs") {
  const EncoderSpec s = small_spec();
  const EncoderParams p = init_encoder(s);
  const Tensor x = random_input(5, 5, 4);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Tensor xp = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 5; ++k) xp.at(i, k) = x.at(perm[i], k);
  const Features a = encode(s, p, x);
  const Features b = encode(s, p, xp);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(b.z_age.row(i) == a.z_age.row(perm[i]));
    CHECK(b.z_id.row(i) == a.z_id.row(perm[i]));
  }
  CHECK(encode(s, p, x).z_age == a.z_age);
}

TEST_CASE("forward gradient matches finite differences") {
  for (Activation act : {Activation::kTanh, Activation::kIdentity}) {
    EncoderSpec s = small_spec();
    s.activation = act;
    const EncoderParams p = init_encoder(s);
    const Tensor x = random_input(4, 5, 5);
    std::vector<Tensor> leaves;
    for (const Tensor* t : p.tensors()) leaves.push_back(*t);
    auto f = [&](ad::Tape& t, std::span<const ad::Var> v) {
      const EncoderOutput out = forward(s, EncoderVars::from_vars(s, v), t.constant(x));
      return ad::sum(out.z_age) + ad::sum(ad::tanh(out.z_id));
    };
    CHECK(ad::grad_check(f, leaves, 1e-5) < 1e-5);
  }
}

TEST_CASE("GRL flips exactly the trunk gradient of the age path") {
  const EncoderSpec s = small_spec();
  const EncoderParams p = init_encoder(s);
  const Tensor x = random_input(6, 5, 6);
  const std::vector<int> labels = {20, 21, 23, 20, 22, 23};
  const ProxyBank bank = init_proxies(labels, s.d_age, 1);
  const double lambda = 0.37;

  auto grads = [&](std::optional<double> grl) {
    ad::Tape t;
    const EncoderVars ev = EncoderVars::bind(t, p, true);
    const BoundBank bb = BoundBank::bind(t, bank, true);
    ForwardOptions fo;
    fo.grl_lambda = grl;
    const EncoderOutput out = forward(s, ev, t.constant(x), fo);
    t.backward(contrast_loss(out.z_age, labels, bb, LossConfig{}));
    std::vector<Tensor> g;
    for (const ad::Var& v : ev.vars()) g.push_back(t.grad(v));
    g.push_back(t.grad(bb.proxies));
    return g;
  };
  const auto plain = grads(std::nullopt);
  const auto reversed = grads(lambda);
  const std::size_t n_trunk = 2 * s.hidden_dims.size();
  for (std::size_t k = 0; k < plain.size(); ++k) {
    for (std::size_t e = 0; e < plain[k].size(); ++e) {
      if (k < n_trunk) {
        const double want = -lambda * plain[k][e];
        CHECK(std::abs(reversed[k][e] - want) <= 1e-9 * std::max(1e-12, std::abs(want)));
      } else {
        CHECK(reversed[k][e] == plain[k][e]);
      }
    }
  }
}

TEST_CASE("predict_age") {
  RegressionHead h = RegressionHead::zeros(3);
  h.bias = 33;
  CHECK(predict_age(h, std::vector<double>{4, 5, 6}) == 33);
  h.bias = 0;
  h.weight[0] = 1;
  CHECK(predict_age(h, std::vector<double>{25, 7, 9}) == 25);
  CHECK_THROWS_AS(predict_age(h, std::vector<double>{1, 2}), ShapeError);

  ad::Tape t;
  ad::Var w = t.param(Tensor::matrix({{0.5}, {-1}}));
  ad::Var b = t.param(Tensor::scalar(2));
  ad::Var z = t.constant(Tensor::matrix({{1, 2}}));
  t.backward(ad::sum(predict_age(z, w, b)));
  CHECK(t.grad(w).values() == std::vector<double>{1, 2});
  CHECK(t.grad(b).item() == 1);
  CHECK(predict_ages(RegressionHead{Tensor::matrix({{0.5}, {-1}}), 2}, Tensor::matrix({{1, 2}, {4, 0}})) ==
        std::vector<double>{0.5, 4});
}
