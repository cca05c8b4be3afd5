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
#include <span>
#include <utility>
#include <vector>

#include "ordcon/autodiff.hpp"
#include "ordcon/tensor.hpp"

namespace ordcon {

enum class Relation { kProgressive, kRegressive, kEqual };

// Progressive iff a < b, Regressive iff a > b.
Relation relation(int a, int b);

// Buckets ages into groups of `granularity` years starting at `origin`.
struct AgeGroupScheme {
  int granularity = 6;
  int origin = 0;

  void validate() const;
  int group_of(int age) const;
  // First and last age covered by group g.
  int group_lo(int g) const { return origin + g * granularity; }
  int group_hi(int g) const { return group_lo(g) + granularity - 1; }
  bool operator==(const AgeGroupScheme&) const = default;
};

int group_of(const AgeGroupScheme& scheme, int age);

// One learnable proxy per integer label. The bank spans the assignable labels
// plus one sentinel on each side, so that c_{y-1} and c_{y+1} exist for every
// assignable y. Sentinels are never assigned to samples.
class ProxyBank {
 public:
  ProxyBank() = default;
  ProxyBank(int label_lo, Tensor proxies);

  // First and last label with a proxy (sentinels included).
  int label_lo() const { return label_lo_; }
  int label_hi() const { return label_lo_ + static_cast<int>(proxies_.rows()) - 1; }
  // Labels samples may be assigned to.
  int assignable_lo() const { return label_lo_ + 1; }
  int assignable_hi() const { return label_hi() - 1; }
  std::size_t size() const { return proxies_.rows(); }
  std::size_t dim() const { return proxies_.cols(); }

  bool contains(int label) const { return label >= label_lo() && label <= label_hi(); }
  bool assignable(int label) const {
    return label >= assignable_lo() && label <= assignable_hi();
  }
  // Row of `label` in the proxy matrix; DomainError outside the bank.
  std::size_t row_of(int label) const;

  // Static assignment: the proxy of an assignable label.
  std::vector<double> assign(int label) const;
  std::size_t assign_row(int label) const;

  Tensor& proxies() { return proxies_; }
  const Tensor& proxies() const { return proxies_; }

  // Throws NumericError if any proxy norm is at or below the floor.
  void check_norms() const;

  bool operator==(const ProxyBank&) const = default;

 private:
  int label_lo_ = 0;
  Tensor proxies_;  // (size x dim)
};

// Proxies for every integer in [min(labels) - 1, max(labels) + 1], each a
// normalised standard-normal draw.
ProxyBank init_proxies(std::span<const int> labels, std::size_t d_age, std::uint64_t seed);

// A bank placed on a tape.
struct BoundBank {
  const ProxyBank* bank = nullptr;
  ad::Var proxies;

  static BoundBank bind(ad::Tape& tape, const ProxyBank& bank, bool trainable);
  ad::Var proxy(int label) const;
};

// v(c_a, c_b) = (c_a - c_b) / |c_a - c_b|
ad::Var proxy_direction(const BoundBank& bank, int a, int b);

struct ReferenceDirections {
  ad::Var forward;
  ad::Var backward;
};

// Progressive (y_i < y_j): v_f = v(c_{y_i}, c_{y_j}), v_b = v(c_{y_i}, c_{y_i - 1}).
// Regressive  (y_i > y_j): v_f = v(c_{y_i}, c_{y_i + 1}), v_b = v(c_{y_j}, c_{y_i}).
ReferenceDirections reference_directions(const BoundBank& bank, int y_i, int y_j, Relation rel);

// Label pairs (a, b) whose direction v(c_a, c_b) is the forward and the
// backward reference of the pair. Shared by the batched losses.
struct ReferencePairs {
  std::pair<int, int> forward;
  std::pair<int, int> backward;
};
ReferencePairs reference_pairs(int y_i, int y_j, Relation rel);

}  // namespace ordcon
