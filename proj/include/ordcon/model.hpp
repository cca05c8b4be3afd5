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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ordcon/autodiff.hpp"
#include "ordcon/tensor.hpp"

namespace ordcon {

enum class Activation { kTanh, kRelu, kIdentity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// Shape of the encoder: a shared trunk of hidden layers followed by parallel
// bias-free projection heads for the age and identity feature spaces.
// d_id == 0 means age-estimation mode (no identity head).
struct EncoderSpec {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden_dims = {64, 64};
  std::size_t d_age = 16;
  std::size_t d_id = 0;
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t trunk_dim() const;
  bool operator==(const EncoderSpec&) const = default;
};

struct EncoderParams {
  std::vector<Tensor> weights;  // layer l: (in x out)
  std::vector<Tensor> biases;   // layer l: (out)
  Tensor age_head;              // (trunk_dim x d_age)
  Tensor id_head;               // (trunk_dim x d_id), empty when d_id == 0

  // Flat, stable ordering used by the optimizer, checkpoints and gradient
  // checks: weights/biases interleaved per layer, then age head, then id head.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
  bool operator==(const EncoderParams&) const = default;
};

// Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
// weights; biases start at zero.
EncoderParams init_encoder(const EncoderSpec& spec);

// Encoder parameters placed on a tape.
struct EncoderVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  ad::Var age_head;
  ad::Var id_head;  // invalid when d_id == 0

  static EncoderVars bind(ad::Tape& tape, const EncoderParams& params, bool trainable);
  // Inverse of EncoderParams::tensors(): rebuilds from vars in that order.
  static EncoderVars from_vars(const EncoderSpec& spec, std::span<const ad::Var> vars);
  std::vector<ad::Var> vars() const;
};

struct ForwardOptions {
  // When set, the trunk output feeding the age head passes through a
  // gradient-reversal node with this coefficient.
  std::optional<double> grl_lambda;
};

struct EncoderOutput {
  ad::Var trunk;
  ad::Var z_age;
  ad::Var z_id;  // invalid in age-estimation mode
};

// x is (batch x input_dim).
EncoderOutput forward(const EncoderSpec& spec, const EncoderVars& vars, ad::Var x,
                      const ForwardOptions& options = {});

struct Features {
  Tensor z_age;
  Tensor z_id;
};

// Forward pass without gradient tracking.
Features encode(const EncoderSpec& spec, const EncoderParams& params, const Tensor& x);

// w_fc: a single linear unit on z_age.
struct RegressionHead {
  Tensor weight;  // (d_age x 1)
  double bias = 0.0;

  static RegressionHead zeros(std::size_t d_age);
  bool operator==(const RegressionHead&) const = default;
};

// Single-sample prediction w^T z + b.
double predict_age(const RegressionHead& head, std::span<const double> z_age);
// Batched on a tape: z_age (N x d_age), weight (d_age x 1), bias scalar -> (N).
ad::Var predict_age(ad::Var z_age, ad::Var weight, ad::Var bias);
std::vector<double> predict_ages(const RegressionHead& head, const Tensor& z_age);

}  // namespace ordcon
