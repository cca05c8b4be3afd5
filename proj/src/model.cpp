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

#include "ordcon/model.hpp"

#include <cmath>
#include <random>

#include "ordcon/errors.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("model.activation: unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "tanh";
}

void EncoderSpec::validate() const {
  if (input_dim == 0) throw ConfigError("model.input_dim: must be >= 1");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("model.hidden_dims: every layer must be >= 1");
  }
  if (d_age == 0) throw ConfigError("model.d_age: must be >= 1");
}

std::size_t EncoderSpec::trunk_dim() const {
  return hidden_dims.empty() ? input_dim : hidden_dims.back();
}

std::vector<Tensor*> EncoderParams::tensors() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  out.push_back(&age_head);
  if (id_head.size() != 0) out.push_back(&id_head);
  return out;
}

std::vector<const Tensor*> EncoderParams::tensors() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  out.push_back(&age_head);
  if (id_head.size() != 0) out.push_back(&id_head);
  return out;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

namespace {

Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w = Tensor::zeros({fan_in, fan_out});
  for (double& v : w.values()) v = dist(rng);
  return w;
}

ad::Var activate(Activation a, ad::Var x) {
  switch (a) {
    case Activation::kTanh: return ad::tanh(x);
    case Activation::kRelu: return ad::relu(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

}  // namespace

EncoderParams init_encoder(const EncoderSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, stream::kModel));
  EncoderParams p;
  std::size_t in = spec.input_dim;
  for (std::size_t h : spec.hidden_dims) {
    p.weights.push_back(uniform_fan_in(in, h, rng));
    p.biases.push_back(Tensor::zeros({h}));
    in = h;
  }
  p.age_head = uniform_fan_in(in, spec.d_age, rng);
  if (spec.d_id > 0) p.id_head = uniform_fan_in(in, spec.d_id, rng);
  return p;
}

EncoderVars EncoderVars::bind(ad::Tape& tape, const EncoderParams& params, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.param(t) : tape.constant(t); };
  EncoderVars v;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    v.weights.push_back(put(params.weights[l]));
    v.biases.push_back(put(params.biases[l]));
  }
  v.age_head = put(params.age_head);
  if (params.id_head.size() != 0) v.id_head = put(params.id_head);
  return v;
}

EncoderVars EncoderVars::from_vars(const EncoderSpec& spec, std::span<const ad::Var> vars) {
  const std::size_t expected = 2 * spec.hidden_dims.size() + 1 + (spec.d_id > 0 ? 1 : 0);
  if (vars.size() != expected) {
    throw ShapeError("EncoderVars::from_vars: expected " + std::to_string(expected) +
                     " tensors, got " + std::to_string(vars.size()));
  }
  EncoderVars v;
  std::size_t k = 0;
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    v.weights.push_back(vars[k++]);
    v.biases.push_back(vars[k++]);
  }
  v.age_head = vars[k++];
  if (spec.d_id > 0) v.id_head = vars[k++];
  return v;
}

std::vector<ad::Var> EncoderVars::vars() const {
  std::vector<ad::Var> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  out.push_back(age_head);
  if (id_head.valid()) out.push_back(id_head);
  return out;
}

EncoderOutput forward(const EncoderSpec& spec, const EncoderVars& vars, ad::Var x,
                      const ForwardOptions& options) {
  const Shape& s = x.shape();
  if (s.size() != 2 || s[1] != spec.input_dim) {
    throw ShapeError("forward: input shape " + shape_str(s) + " does not match input_dim " +
                     std::to_string(spec.input_dim));
  }
  ad::Var h = x;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    h = activate(spec.activation, ad::matmul(h, vars.weights[l]) + vars.biases[l]);
  }
  EncoderOutput out;
  out.trunk = h;
  ad::Var age_in = options.grl_lambda ? ad::grad_reverse(h, *options.grl_lambda) : h;
  out.z_age = ad::matmul(age_in, vars.age_head);
  if (vars.id_head.valid()) out.z_id = ad::matmul(h, vars.id_head);
  return out;
}

Features encode(const EncoderSpec& spec, const EncoderParams& params, const Tensor& x) {
  ad::Tape tape;
  const EncoderVars vars = EncoderVars::bind(tape, params, false);
  const EncoderOutput out = forward(spec, vars, tape.constant(x));
  Features f;
  f.z_age = out.z_age.value();
  if (out.z_id.valid()) f.z_id = out.z_id.value();
  return f;
}

RegressionHead RegressionHead::zeros(std::size_t d_age) {
  return RegressionHead{Tensor::zeros({d_age, 1}), 0.0};
}

double predict_age(const RegressionHead& head, std::span<const double> z_age) {
  if (z_age.size() != head.weight.size()) {
    throw ShapeError("predict_age: feature dim " + std::to_string(z_age.size()) +
                     " but head expects " + std::to_string(head.weight.size()));
  }
  double s = head.bias;
  for (std::size_t k = 0; k < z_age.size(); ++k) s += head.weight[k] * z_age[k];
  return s;
}

ad::Var predict_age(ad::Var z_age, ad::Var weight, ad::Var bias) {
  return ad::row_sum(ad::matmul(z_age, weight)) + bias;
}

std::vector<double> predict_ages(const RegressionHead& head, const Tensor& z_age) {
  std::vector<double> out(z_age.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_age(head, z_age.row(i));
  return out;
}

}  // namespace ordcon
