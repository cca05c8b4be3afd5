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

#include "ordcon/model.hpp"
#include "ordcon/objectives.hpp"
#include "ordcon/proxy_bank.hpp"
#include "ordcon/synthdata.hpp"

namespace ordcon {

struct TrainConfig {
  BatchMode mode = BatchMode::kAge;
  int epochs_pretrain = 30;
  int epochs_finetune = 10;
  int grl_start_epoch = 30;  // aifr only
  std::size_t batch_size = 256;
  std::size_t finetune_batch_size = 64;
  double lr = 2e-4;
  // L1 stage (finetune and the regression baseline).
  double finetune_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double holdout_fraction = 0.2;
  bool unfreeze_encoder = false;
  // Weights of the two aifr pretraining terms (identity, contrast).
  double identity_weight = 1.0;
  double contrast_weight = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Classical momentum SGD with L2 weight decay:
//   v <- momentum * v + (g + weight_decay * p);  p <- p - lr * v
class Sgd {
 public:
  Sgd(double lr, double momentum, double weight_decay);

  // `grads[k]` must match `params[k]` in shape; state is keyed by position.
  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

 private:
  double lr_;
  double momentum_;
  double weight_decay_;
  std::vector<Tensor> velocity_;
};

// One stateless step (zero initial velocity).
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr,
              double momentum, double weight_decay);

struct EpochRecord {
  int epoch = 0;
  std::string stage;
  double total = 0.0;
  double order = 0.0;
  double metric = 0.0;
  double identity = 0.0;
  double l1 = 0.0;
  double grl_lambda = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  BatchMode mode = BatchMode::kAge;
  EncoderSpec spec;
  EncoderParams params;
  ProxyBank bank;
  std::optional<RegressionHead> head;
  int epoch = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> trace;
};

struct PipelineConfig {
  EncoderSpec model;
  TrainConfig train;
  LossConfig loss;
  AgeGroupScheme groups;
};

// Fresh encoder + proxy bank for `d`; proxies cover the data's age range (or
// its group range in aifr mode) plus sentinels.
Checkpoint init_checkpoint(const Dataset& d, const PipelineConfig& cfg);

// Contrastive pretraining of encoder and proxies on the contrast loss.
TrainResult pretrain_age(const Dataset& train, const PipelineConfig& cfg);
TrainResult pretrain_age(const Dataset& train, const PipelineConfig& cfg, Checkpoint start);

// L1 regression of the head on z_age; encoder frozen unless
// cfg.train.unfreeze_encoder.
TrainResult finetune_age(const Checkpoint& ckpt, const Dataset& train, const PipelineConfig& cfg);

// Regression baseline: a fresh encoder trained end to end with the L1 loss
// alone for epochs_pretrain + epochs_finetune epochs.
TrainResult train_l1_baseline(const Dataset& train, const PipelineConfig& cfg);

// Multitask identity + contrast training; after grl_start_epoch the age path
// passes through a GRL whose coefficient follows grl_lambda over the
// remaining epochs.
TrainResult train_aifr(const Dataset& train, const PipelineConfig& cfg);

// GRL coefficient used at `epoch`; nullopt before onset.
std::optional<double> grl_schedule(const TrainConfig& cfg, const LossConfig& loss, int epoch);

struct Metrics {
  std::optional<double> mae;
  std::optional<double> order_consistency;
  std::optional<double> rank1;
  std::optional<double> age_probe_acc;
  std::size_t n_eval = 0;
  std::vector<EpochRecord> loss_trace;
};

// Evaluates on held-out data. Age mode: MAE (when a head exists) and order
// consistency of z_age. Aifr mode: rank-1 and age-probe accuracy on z_id, and
// order consistency of z_age over group labels.
Metrics evaluate(const Checkpoint& ckpt, const Dataset& test, const PipelineConfig& cfg);

}  // namespace ordcon
