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

#include "ordcon/proxy_bank.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ordcon/errors.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

Relation relation(int a, int b) {
  if (a < b) return Relation::kProgressive;
  if (a > b) return Relation::kRegressive;
  return Relation::kEqual;
}

void AgeGroupScheme::validate() const {
  if (granularity < 1) throw ConfigError("groups.granularity: must be >= 1");
}

int AgeGroupScheme::group_of(int age) const {
  if (age < origin) {
    throw DomainError("group_of: age " + std::to_string(age) + " below origin " +
                      std::to_string(origin));
  }
  return (age - origin) / granularity;
}

int group_of(const AgeGroupScheme& scheme, int age) { return scheme.group_of(age); }

ProxyBank::ProxyBank(int label_lo, Tensor proxies)
    : label_lo_(label_lo), proxies_(std::move(proxies)) {
  if (proxies_.rank() != 2 || proxies_.rows() < 3) {
    throw ShapeError("ProxyBank: need a (labels x dim) matrix with at least 3 rows, got " +
                     shape_str(proxies_.shape()));
  }
}

std::size_t ProxyBank::row_of(int label) const {
  if (!contains(label)) {
    throw DomainError("proxy bank: label " + std::to_string(label) + " outside [" +
                      std::to_string(label_lo()) + ", " + std::to_string(label_hi()) + "]");
  }
  return static_cast<std::size_t>(label - label_lo_);
}

std::size_t ProxyBank::assign_row(int label) const {
  if (!assignable(label)) {
    throw DomainError("assign: label " + std::to_string(label) + " not assignable, range [" +
                      std::to_string(assignable_lo()) + ", " +
                      std::to_string(assignable_hi()) + "]");
  }
  return row_of(label);
}

std::vector<double> ProxyBank::assign(int label) const { return proxies_.row(assign_row(label)); }

void ProxyBank::check_norms() const {
  const std::size_t d = dim();
  for (std::size_t r = 0; r < size(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += proxies_.at(r, k) * proxies_.at(r, k);
    if (!(std::sqrt(s) > ad::kNormFloor)) {
      throw NumericError("proxy for label " + std::to_string(label_lo_ + static_cast<int>(r)) +
                         " collapsed below the norm floor");
    }
  }
}

ProxyBank init_proxies(std::span<const int> labels, std::size_t d_age, std::uint64_t seed) {
  if (labels.empty()) throw DomainError("init_proxies: empty label set");
  if (d_age == 0) throw DomainError("init_proxies: d_age must be >= 1");
  const auto [mn, mx] = std::minmax_element(labels.begin(), labels.end());
  const int lo = *mn - 1;
  const std::size_t n = static_cast<std::size_t>(*mx - *mn + 3);
  Rng rng(derive_seed(seed, stream::kProxies));
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor c = Tensor::zeros({n, d_age});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    do {
      s = 0.0;
      for (std::size_t k = 0; k < d_age; ++k) {
        c.at(r, k) = normal(rng);
        s += c.at(r, k) * c.at(r, k);
      }
    } while (!(std::sqrt(s) > 1e-6));
    const double nrm = std::sqrt(s);
    for (std::size_t k = 0; k < d_age; ++k) c.at(r, k) /= nrm;
  }
  return ProxyBank(lo, std::move(c));
}

BoundBank BoundBank::bind(ad::Tape& tape, const ProxyBank& bank, bool trainable) {
  return BoundBank{&bank, trainable ? tape.param(bank.proxies()) : tape.constant(bank.proxies())};
}

ad::Var BoundBank::proxy(int label) const {
  const std::size_t r = bank->row_of(label);
  return ad::reshape(ad::gather(proxies, std::span<const std::size_t>(&r, 1)), {bank->dim()});
}

ad::Var proxy_direction(const BoundBank& bank, int a, int b) {
  if (a == b) throw DomainError("proxy_direction: labels must differ");
  const std::size_t ra = bank.bank->row_of(a);
  const std::size_t rb = bank.bank->row_of(b);
  const std::size_t ia[] = {ra};
  const std::size_t ib[] = {rb};
  ad::Var diff = ad::gather(bank.proxies, ia) - ad::gather(bank.proxies, ib);
  return ad::reshape(ad::l2_normalize(diff), {bank.bank->dim()});
}

ReferencePairs reference_pairs(int y_i, int y_j, Relation rel) {
  switch (rel) {
    case Relation::kProgressive:
      return {{y_i, y_j}, {y_i, y_i - 1}};
    case Relation::kRegressive:
      return {{y_i, y_i + 1}, {y_j, y_i}};
    case Relation::kEqual:
      break;
  }
  throw DomainError("reference_directions: equal labels carry no order");
}

ReferenceDirections reference_directions(const BoundBank& bank, int y_i, int y_j, Relation rel) {
  const ReferencePairs p = reference_pairs(y_i, y_j, rel);
  return {proxy_direction(bank, p.forward.first, p.forward.second),
          proxy_direction(bank, p.backward.first, p.backward.second)};
}

}  // namespace ordcon
