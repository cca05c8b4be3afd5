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

#include "ordcon/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ordcon/errors.hpp"
#include "ordcon/metrics.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

void TrainConfig::validate() const {
  if (epochs_pretrain < 0) throw ConfigError("train.epochs_pretrain: must be >= 0");
  if (epochs_finetune < 0) throw ConfigError("train.epochs_finetune: must be >= 0");
  if (batch_size < 2) throw ConfigError("train.batch_size: must be >= 2");
  if (finetune_batch_size < 1) throw ConfigError("train.finetune_batch_size: must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("train.lr: must be >= 0");
  if (!(finetune_lr >= 0.0)) throw ConfigError("train.finetune_lr: must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum: must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay: must be >= 0");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("train.holdout_fraction: must be in (0, 1)");
  }
  // onset at or after epochs_pretrain means the GRL never engages
  if (grl_start_epoch < 0) throw ConfigError("train.grl_start_epoch: must be >= 0");
}

Sgd::Sgd(double lr, double momentum, double weight_decay)
    : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

void Sgd::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (grads.size() != params.size()) {
    throw DomainError("sgd: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(grads.size()) + " gradients");
  }
  if (velocity_.empty()) {
    for (Tensor* p : params) velocity_.push_back(Tensor::zeros(p->shape()));
  }
  if (velocity_.size() != params.size()) throw DomainError("sgd: parameter set changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (g.shape() != p.shape()) {
      throw DomainError("sgd: missing gradient for parameter " + std::to_string(k) + " (shape " +
                        shape_str(g.shape()) + " vs " + shape_str(p.shape()) + ")");
    }
    Tensor& v = velocity_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i] + weight_decay_ * p[i];
      p[i] -= lr_ * v[i];
    }
  }
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr,
              double momentum, double weight_decay) {
  Sgd(lr, momentum, weight_decay).step(params, grads);
}

namespace {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch,
                                                    std::uint64_t seed, int epoch,
                                                    std::size_t min_batch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, stream::kTrain, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch) {
    const std::size_t e = std::min(n, s + batch);
    if (e - s < min_batch) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                     order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

std::vector<int> range_labels(int lo, int hi) {
  std::vector<int> out;
  for (int a = lo; a <= hi; ++a) out.push_back(a);
  return out;
}

void require_finite(double v, const char* what, int epoch) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " loss at epoch " + std::to_string(epoch));
  }
}

double value_or_zero(const ad::Var& v) { return v.valid() ? v.value().item() : 0.0; }

Tensor rows_of(const Tensor& m, std::span<const std::size_t> idx) {
  const std::size_t c = m.cols();
  Tensor out = Tensor::zeros({idx.size(), c});
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::copy(m.data() + idx[k] * c, m.data() + (idx[k] + 1) * c, out.data() + k * c);
  return out;
}

Tensor inputs_of(const Dataset& d) {
  Tensor x = Tensor::zeros({d.size(), d.input_dim()});
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.samples[i].x.size() != d.input_dim()) throw ShapeError("dataset row has wrong input dim");
    std::copy(d.samples[i].x.begin(), d.samples[i].x.end(), x.data() + i * d.input_dim());
  }
  return x;
}

std::vector<Tensor*> trainables(Checkpoint& ck) {
  std::vector<Tensor*> out = ck.params.tensors();
  out.push_back(&ck.bank.proxies());
  return out;
}

}  // namespace

Checkpoint init_checkpoint(const Dataset& d, const PipelineConfig& cfg) {
  cfg.train.validate();
  cfg.loss.validate();
  Checkpoint ck;
  ck.mode = cfg.train.mode;
  ck.spec = cfg.model;
  ck.spec.input_dim = d.input_dim();
  ck.spec.seed = derive_seed(cfg.train.seed, stream::kModel);
  if (ck.mode == BatchMode::kAge) ck.spec.d_id = 0;
  else if (ck.spec.d_id == 0) throw ConfigError("model.d_id: aifr mode needs an identity head");
  ck.params = init_encoder(ck.spec);
  std::vector<int> labels;
  if (ck.mode == BatchMode::kAifr) {
    cfg.groups.validate();
    labels = group_labels(cfg.groups, d.spec.age_lo, d.spec.age_hi);
  } else {
    labels = range_labels(d.spec.age_lo, d.spec.age_hi);
  }
  ck.bank = init_proxies(labels, ck.spec.d_age, derive_seed(cfg.train.seed, stream::kProxies));
  return ck;
}

TrainResult pretrain_age(const Dataset& train, const PipelineConfig& cfg) {
  return pretrain_age(train, cfg, init_checkpoint(train, cfg));
}

TrainResult pretrain_age(const Dataset& train, const PipelineConfig& cfg, Checkpoint start) {
  if (cfg.train.mode != BatchMode::kAge) throw ConfigError("train.mode: pretrain needs mode=age");
  TrainResult res{std::move(start), {}};
  Checkpoint& ck = res.checkpoint;
  Sgd opt(cfg.train.lr, cfg.train.momentum, cfg.train.weight_decay);
  for (int epoch = 0; epoch < cfg.train.epochs_pretrain; ++epoch) {
    EpochRecord rec{epoch, "pretrain"};
    std::size_t n_batches = 0;
    try {
      for (const auto& idx : epoch_batches(train.size(), cfg.train.batch_size, cfg.train.seed, epoch, 2)) {
        const LabeledBatch batch = make_batch(train, idx, BatchMode::kAge);
        ad::Tape tape;
        const EncoderVars ev = EncoderVars::bind(tape, ck.params, true);
        const BoundBank bb = BoundBank::bind(tape, ck.bank, true);
        const EncoderOutput out = forward(ck.spec, ev, tape.constant(batch.x));
        const ContrastTerms terms = contrast_terms(out.z_age, batch.y_age, bb, cfg.loss);
        const double total = terms.total.value().item();
        require_finite(total, "contrast", epoch);
        tape.backward(terms.total);
        std::vector<Tensor> grads;
        for (const ad::Var& v : ev.vars()) grads.push_back(tape.grad(v));
        grads.push_back(tape.grad(bb.proxies));
        opt.step(trainables(ck), grads);
        ck.bank.check_norms();
        rec.total += total;
        rec.order += value_or_zero(terms.order);
        rec.metric += value_or_zero(terms.metric);
        ++n_batches;
      }
    } catch (const DomainError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (n_batches) {
      const double inv = 1.0 / double(n_batches);
      rec.total *= inv;
      rec.order *= inv;
      rec.metric *= inv;
    }
    res.trace.push_back(rec);
    ck.epoch = epoch + 1;
  }
  return res;
}

TrainResult finetune_age(const Checkpoint& ckpt, const Dataset& train, const PipelineConfig& cfg) {
  if (train.size() == 0) throw DomainError("finetune: empty training set");
  TrainResult res{ckpt, {}};
  Checkpoint& ck = res.checkpoint;
  const bool unfrozen = cfg.train.unfreeze_encoder;

  std::vector<double> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) labels[i] = train.samples[i].y_age;
  if (!ck.head) {
    ck.head = RegressionHead::zeros(ck.spec.d_age);
    ck.head->bias = std::accumulate(labels.begin(), labels.end(), 0.0) / double(labels.size());
  }
  const Tensor x_all = inputs_of(train);
  const Tensor z_frozen = unfrozen ? Tensor{} : encode(ck.spec, ck.params, x_all).z_age;

  Sgd opt(cfg.train.finetune_lr, cfg.train.momentum, cfg.train.weight_decay);
  Tensor bias = Tensor::scalar(ck.head->bias);
  const int epochs = cfg.train.epochs_finetune;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    EpochRecord rec{epoch, "finetune"};
    std::size_t n_batches = 0;
    try {
      for (const auto& idx : epoch_batches(train.size(), cfg.train.finetune_batch_size,
                                           derive_seed(cfg.train.seed, 0xf1), epoch, 1)) {
        std::vector<double> y(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) y[k] = labels[idx[k]];
        ad::Tape tape;
        ad::Var w = tape.param(ck.head->weight);
        ad::Var b = tape.param(bias);
        EncoderVars ev;
        ad::Var z;
        if (unfrozen) {
          ev = EncoderVars::bind(tape, ck.params, true);
          z = forward(ck.spec, ev, tape.constant(rows_of(x_all, idx))).z_age;
        } else {
          z = tape.constant(rows_of(z_frozen, idx));
        }
        ad::Var loss = age_l1_loss(predict_age(z, w, b), y);
        const double l = loss.value().item();
        require_finite(l, "L1", epoch);
        tape.backward(loss);
        std::vector<Tensor*> params{&ck.head->weight, &bias};
        std::vector<Tensor> grads{tape.grad(w), tape.grad(b)};
        if (unfrozen) {
          for (Tensor* t : ck.params.tensors()) params.push_back(t);
          for (const ad::Var& v : ev.vars()) grads.push_back(tape.grad(v));
        }
        opt.step(params, grads);
        rec.l1 += l;
        ++n_batches;
      }
    } catch (const DomainError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (n_batches) rec.l1 /= double(n_batches);
    rec.total = rec.l1;
    res.trace.push_back(rec);
  }
  ck.head->bias = bias.item();
  return res;
}

TrainResult train_l1_baseline(const Dataset& train, const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  c.train.mode = BatchMode::kAge;
  c.train.unfreeze_encoder = true;
  c.train.epochs_finetune = cfg.train.epochs_pretrain + cfg.train.epochs_finetune;
  return finetune_age(init_checkpoint(train, c), train, c);
}

std::optional<double> grl_schedule(const TrainConfig& cfg, const LossConfig& loss, int epoch) {
  if (cfg.mode != BatchMode::kAifr || epoch < cfg.grl_start_epoch || cfg.grl_start_epoch >= cfg.epochs_pretrain) {
    return std::nullopt;
  }
  const double span = double(cfg.epochs_pretrain - cfg.grl_start_epoch);
  const double t = std::clamp(double(epoch - cfg.grl_start_epoch) / span, 0.0, 1.0);
  return grl_lambda(t, loss.gamma);
}

TrainResult train_aifr(const Dataset& train, const PipelineConfig& cfg) {
  if (cfg.train.mode != BatchMode::kAifr) throw ConfigError("train.mode: train-aifr needs mode=aifr");
  TrainResult res{init_checkpoint(train, cfg), {}};
  Checkpoint& ck = res.checkpoint;
  const SyntheticGenerator generator(train.spec);
  Sgd opt(cfg.train.lr, cfg.train.momentum, cfg.train.weight_decay);
  for (int epoch = 0; epoch < cfg.train.epochs_pretrain; ++epoch) {
    const std::optional<double> lambda = grl_schedule(cfg.train, cfg.loss, epoch);
    EpochRecord rec{epoch, "aifr"};
    rec.grl_lambda = lambda.value_or(0.0);
    std::size_t n_batches = 0;
    try {
      for (const auto& idx : epoch_batches(train.size(), cfg.train.batch_size, cfg.train.seed, epoch, 1)) {
        const LabeledBatch batch = make_batch(train, idx, BatchMode::kAifr, &cfg.groups, &generator);
        if (batch.size() < 2) continue;
        ad::Tape tape;
        const EncoderVars ev = EncoderVars::bind(tape, ck.params, true);
        const BoundBank bb = BoundBank::bind(tape, ck.bank, true);
        ForwardOptions fo;
        fo.grl_lambda = lambda;
        const EncoderOutput out = forward(ck.spec, ev, tape.constant(batch.x), fo);
        const ad::Var id_loss = identity_contrastive_loss(out.z_id, batch.y_id, cfg.loss);
        const ContrastTerms terms = contrast_terms(out.z_age, batch.y_group, bb, cfg.loss);
        const ad::Var total = ad::scale(id_loss, cfg.train.identity_weight) +
                              ad::scale(terms.total, cfg.train.contrast_weight);
        const double t = total.value().item();
        require_finite(t, "aifr", epoch);
        tape.backward(total);
        std::vector<Tensor> grads;
        for (const ad::Var& v : ev.vars()) grads.push_back(tape.grad(v));
        grads.push_back(tape.grad(bb.proxies));
        opt.step(trainables(ck), grads);
        ck.bank.check_norms();
        rec.total += t;
        rec.identity += id_loss.value().item();
        rec.order += value_or_zero(terms.order);
        rec.metric += value_or_zero(terms.metric);
        ++n_batches;
      }
    } catch (const DomainError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (n_batches) {
      const double inv = 1.0 / double(n_batches);
      rec.total *= inv;
      rec.identity *= inv;
      rec.order *= inv;
      rec.metric *= inv;
    }
    res.trace.push_back(rec);
    ck.epoch = epoch + 1;
  }
  return res;
}

Metrics evaluate(const Checkpoint& ckpt, const Dataset& test, const PipelineConfig& cfg) {
  Metrics m;
  m.n_eval = test.size();
  if (test.size() == 0) return m;
  if (test.input_dim() != ckpt.spec.input_dim) {
    throw CompatError("checkpoint expects input_dim " + std::to_string(ckpt.spec.input_dim) +
                      " but data has input_dim " + std::to_string(test.input_dim()));
  }
  const Features f = encode(ckpt.spec, ckpt.params, inputs_of(test));
  std::vector<int> ages(test.size()), ids(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    ages[i] = test.samples[i].y_age;
    ids[i] = test.samples[i].y_id;
  }

  auto try_order = [&](std::span<const int> labels) -> std::optional<double> {
    for (int l : labels) {
      if (!ckpt.bank.contains(l - 1) || !ckpt.bank.contains(l)) return std::nullopt;
    }
    try {
      return order_consistency(f.z_age, labels, ckpt.bank);
    } catch (const DomainError&) {
      return std::nullopt;
    }
  };

  if (ckpt.mode == BatchMode::kAge) {
    m.order_consistency = try_order(ages);
    if (ckpt.head) {
      const std::vector<double> preds = predict_ages(*ckpt.head, f.z_age);
      const std::vector<double> truth(ages.begin(), ages.end());
      m.mae = mae(preds, truth);
    }
    return m;
  }

  std::vector<int> groups(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) groups[i] = cfg.groups.group_of(ages[i]);
  m.order_consistency = try_order(groups);

  // gallery: oldest sample of each identity; probes: everything else
  std::map<int, std::size_t> oldest;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto it = oldest.find(ids[i]);
    if (it == oldest.end() || ages[i] > ages[it->second]) oldest[ids[i]] = i;
  }
  std::vector<std::size_t> gal, probe;
  std::vector<bool> in_gallery(test.size(), false);
  for (const auto& [id, i] : oldest) {
    gal.push_back(i);
    in_gallery[i] = true;
  }
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!in_gallery[i]) probe.push_back(i);
  if (!probe.empty()) {
    std::vector<int> gid, pid;
    for (std::size_t i : gal) gid.push_back(ids[i]);
    for (std::size_t i : probe) pid.push_back(ids[i]);
    m.rank1 = rank1_accuracy(rows_of(f.z_id, gal), gid, rows_of(f.z_id, probe), pid);
  }
  try {
    m.age_probe_acc = age_probe_accuracy(f.z_id, groups, derive_seed(cfg.train.seed, stream::kProbe));
  } catch (const DomainError&) {
  }
  return m;
}

}  // namespace ordcon
