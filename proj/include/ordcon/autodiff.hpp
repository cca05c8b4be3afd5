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

// Define-by-run reverse-mode differentiation over dense double tensors.
//
// A Tape records every op applied to its Vars. Parameters enter the tape as
// leaves (Tape::param), data as constants (Tape::constant). After
// Tape::backward(loss) every node that requires a gradient holds one, and
// Tape::grad / Tape::leaf_grads read them back. Tapes are cheap and meant to
// be rebuilt on every forward pass; a tape is confined to one thread.
//
// Binary elementwise ops broadcast in three ways only: equal shapes, a
// single-element operand against anything, or an operand whose shape equals
// the other's trailing dims (broadcast over the leading batch axis).

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "ordcon/tensor.hpp"

namespace ordcon::ad {

// Norms at or below this floor are rejected, never clamped.
inline constexpr double kNormFloor = 1e-12;

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Leaf node id -> gradient, same shape as the leaf.
using GradMap = std::map<std::size_t, Tensor>;

class Tape {
 public:
  // Propagates `upstream` (the gradient of the loss w.r.t. this node's
  // value) into the parents via Tape::accumulate.
  using Backward = std::function<void(Tape&, const Tensor& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(Tensor value);
  Var constant(Tensor value);

  // Appends an op node. Used by the op implementations.
  Var record(Tensor value, std::vector<std::size_t> parents, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool is_leaf(std::size_t id) const { return nodes_[id].leaf; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of node `id`, zero-initialised on first access.
  Tensor& accumulate(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and walks the tape in reverse. `loss` must
  // hold exactly one value. May be called once per tape.
  void backward(Var loss);

  // Gradient of `v` after backward(); zeros when `v` was not reached.
  Tensor grad(Var v) const;
  GradMap leaf_grads() const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
    bool leaf = false;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

// Elementwise arithmetic with the broadcasting rules above.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);  // DomainError on any zero divisor entry

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);

Var scale(Var a, double c);
Var add_scalar(Var a, double c);

// (m x k) . (k x n)
Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);  // same element count

Var exp(Var a);
Var log(Var a);  // DomainError on non-positive entries
Var abs(Var a);  // subgradient 0 at 0
Var tanh(Var a);
Var relu(Var a);

Var sum(Var a);   // -> scalar
Var mean(Var a);  // -> scalar
Var row_sum(Var a);  // (m x n) -> (m)
Var row_dot(Var a, Var b);  // (m x n), (m x n) -> (m)
Var dot(Var a, Var b);  // vectors -> scalar
Var logsumexp_rows(Var a);  // (m x n) -> (m), max-shifted

// Vector -> unit vector, or matrix -> matrix with unit rows. Throws
// DomainError when a norm is <= kNormFloor.
Var l2_normalize(Var a);
Var cosine_sim(Var u, Var w);

// Row gather (matrix) or element gather (vector); backward scatter-adds in
// index order.
Var gather(Var a, std::span<const std::size_t> index);
// out[i] = a[i, cols[i]]
Var pick(Var a, std::span<const std::size_t> cols);
// out[s] = sum of a[k] with segment[k] == s, for a vector a.
Var segment_sum(Var a, std::span<const std::size_t> segment,
                std::size_t n_segments);
// Identity forward; backward multiplies the upstream gradient by -lambda.
Var grad_reverse(Var a, double lambda);

// Gradient check by central differences. `f` receives one Var per entry of
// `leaves` (as params on a fresh tape) and returns a single-value Var.
// Returns max over every leaf entry of
//   |analytic - central| / max(|analytic|, |central|, 1e-12).
// Throws NumericError when any evaluation is non-finite.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // Five-point central stencil (error O(eps^4)) instead of the two-point one.
  bool five_point = false;
  // Test hook: negates the analytic gradient before comparison.
  bool flip_analytic = false;
  // Function differenced numerically; `f` itself when empty. Lets a
  // gradient-altering op be checked against its intended gradient.
  ScalarFn numeric;
};

double grad_check(const ScalarFn& f, std::span<const Tensor> leaves,
                  const GradCheckOptions& options = {});
double grad_check(const ScalarFn& f, std::span<const Tensor> leaves, double eps);

}  // namespace ordcon::ad
