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

#include "ordcon/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ordcon/errors.hpp"

namespace ordcon::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::param(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents,
                 Backward backward) {
  bool needs = false;
  for (std::size_t p : parents) needs = needs || nodes_[p].requires_grad;
  Node node{std::move(value), std::move(parents), {}, needs, false};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::accumulate(std::size_t id) {
  Tensor& g = grads_[id];
  if (g.size() == 0 && nodes_[id].value.size() != 0) {
    g = Tensor::zeros(nodes_[id].value.shape());
  }
  return g;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (backward_done_) throw Error("backward: already run on this tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a single value, got shape " +
                     shape_str(loss.shape()));
  }
  backward_done_ = true;
  grads_.assign(nodes_.size(), Tensor{});
  accumulate(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || grads_[i].size() == 0) continue;
    node.backward(*this, grads_[i]);
  }
}

Tensor Tape::grad(Var v) const {
  if (backward_done_ && v.id() < grads_.size() && grads_[v.id()].size() != 0) {
    return grads_[v.id()];
  }
  return Tensor::zeros(v.shape());
}

GradMap Tape::leaf_grads() const {
  GradMap out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].leaf || !nodes_[i].requires_grad) continue;
    const bool reached = backward_done_ && grads_[i].size() != 0;
    out.emplace(i, reached ? grads_[i] : Tensor::zeros(nodes_[i].value.shape()));
  }
  return out;
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw Error("operands live on different tapes");
  }
  return *a.tape();
}

enum class Bcast { kSame, kScalarA, kScalarB, kRowA, kRowB };

struct Plan {
  Bcast mode;
  Shape out;
  std::size_t inner;

  std::size_t ia(std::size_t k) const {
    switch (mode) {
      case Bcast::kScalarA: return 0;
      case Bcast::kRowA: return k % inner;
      default: return k;
    }
  }
  std::size_t ib(std::size_t k) const {
    switch (mode) {
      case Bcast::kScalarB: return 0;
      case Bcast::kRowB: return k % inner;
      default: return k;
    }
  }
};

bool trailing_equal(const Shape& big, const Shape& small) {
  return big.size() == small.size() + 1 &&
         std::equal(small.begin(), small.end(), big.begin() + 1);
}

Plan plan_for(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return {Bcast::kSame, a.shape(), 0};
  if (b.size() == 1) return {Bcast::kScalarB, a.shape(), 0};
  if (a.size() == 1) return {Bcast::kScalarA, b.shape(), 0};
  if (trailing_equal(a.shape(), b.shape())) return {Bcast::kRowB, a.shape(), b.size()};
  if (trailing_equal(b.shape(), a.shape())) return {Bcast::kRowA, b.shape(), a.size()};
  throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()) + " do not conform");
}

// df(x) is the derivative of f at x.
template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Tape& tape = *a.tape();
  const Tensor& x = a.value();
  Tensor y = Tensor::zeros(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f(x[k]);
  const std::size_t ida = a.id();
  return tape.record(std::move(y), {ida}, [ida, df](Tape& t, const Tensor& up) {
    const Tensor& xin = t.value(ida);
    Tensor& ga = t.accumulate(ida);
    for (std::size_t k = 0; k < xin.size(); ++k) ga[k] += up[k] * df(xin[k]);
  });
}

void require_rank(const char* op, Var a, std::size_t rank) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_str(a.shape()));
  }
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Plan plan = plan_for("add", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros(plan.out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[plan.ia(k)] + y[plan.ib(k)];
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [plan, ida, idb](Tape& t, const Tensor& up) {
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t k = 0; k < up.size(); ++k) ga[plan.ia(k)] += up[k];
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t k = 0; k < up.size(); ++k) gb[plan.ib(k)] += up[k];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Plan plan = plan_for("sub", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros(plan.out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[plan.ia(k)] - y[plan.ib(k)];
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [plan, ida, idb](Tape& t, const Tensor& up) {
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t k = 0; k < up.size(); ++k) ga[plan.ia(k)] += up[k];
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t k = 0; k < up.size(); ++k) gb[plan.ib(k)] -= up[k];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Plan plan = plan_for("mul", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros(plan.out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[plan.ia(k)] * y[plan.ib(k)];
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [plan, ida, idb](Tape& t, const Tensor& up) {
    const Tensor& xa = t.value(ida);
    const Tensor& xb = t.value(idb);
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t k = 0; k < up.size(); ++k) ga[plan.ia(k)] += up[k] * xb[plan.ib(k)];
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t k = 0; k < up.size(); ++k) gb[plan.ib(k)] += up[k] * xa[plan.ia(k)];
    }
  });
}

Var div(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Plan plan = plan_for("div", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  for (double v : y.values()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  Tensor out = Tensor::zeros(plan.out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[plan.ia(k)] / y[plan.ib(k)];
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [plan, ida, idb](Tape& t, const Tensor& up) {
    const Tensor& xa = t.value(ida);
    const Tensor& xb = t.value(idb);
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t k = 0; k < up.size(); ++k) ga[plan.ia(k)] += up[k] / xb[plan.ib(k)];
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t k = 0; k < up.size(); ++k) {
        const double d = xb[plan.ib(k)];
        gb[plan.ib(k)] -= up[k] * xa[plan.ia(k)] / (d * d);
      }
    }
  });
}

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }
Var operator/(Var a, Var b) { return div(a, b); }
Var operator-(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xip = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xip * y[p * n + j];
    }
  }
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [=](Tape& t, const Tensor& up) {
    const Tensor& xa = t.value(ida);
    const Tensor& xb = t.value(idb);
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += up[i * n + j] * xb[p * n + j];
          ga[i * k + p] += s;
        }
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double xip = xa[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += xip * up[i * n + j];
        }
    }
  });
}

Var transpose(Var a) {
  require_rank("transpose", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  const std::size_t ida = a.id();
  return a.tape()->record(std::move(out), {ida}, [=](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += up[j * m + i];
  });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Tensor out(std::move(shape), a.value().values());
  const std::size_t ida = a.id();
  return a.tape()->record(std::move(out), {ida}, [ida](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    for (std::size_t k = 0; k < up.size(); ++k) ga[k] += up[k];
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double x) { return std::exp(x); });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive entry " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::log(x); },
               [](double x) { return 1.0 / x; });
}

Var abs(Var a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double x) {
                 const double y = std::tanh(x);
                 return 1.0 - y * y;
               });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ida = a.id();
  return a.tape()->record(Tensor::scalar(s), {ida}, [ida](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += up[0];
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  require_rank("row_sum", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += x[i * n + j];
  const std::size_t ida = a.id();
  return a.tape()->record(std::move(out), {ida}, [=](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += up[i];
  });
}

Var row_dot(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_rank("row_dot", a, 2);
  if (a.shape() != b.shape()) {
    throw ShapeError("row_dot: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += x[i * n + j] * y[i * n + j];
  const std::size_t ida = a.id(), idb = b.id();
  return tape.record(std::move(out), {ida, idb}, [=](Tape& t, const Tensor& up) {
    const Tensor& xa = t.value(ida);
    const Tensor& xb = t.value(idb);
    if (t.requires_grad(ida)) {
      Tensor& ga = t.accumulate(ida);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += up[i] * xb[i * n + j];
    }
    if (t.requires_grad(idb)) {
      Tensor& gb = t.accumulate(idb);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[i * n + j] += up[i] * xa[i * n + j];
    }
  });
}

Var dot(Var a, Var b) {
  require_rank("dot", a, 1);
  require_rank("dot", b, 1);
  if (a.shape() != b.shape()) {
    throw ShapeError("dot: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
  return sum(mul(a, b));
}

Var logsumexp_rows(Var a) {
  require_rank("logsumexp_rows", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (n == 0) throw ShapeError("logsumexp_rows: zero columns");
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = x[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[i * n + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(x[i * n + j] - mx);
    out[i] = mx + std::log(s);
  }
  const std::size_t ida = a.id();
  Tensor lse = out;
  return a.tape()->record(std::move(out), {ida}, [=](Tape& t, const Tensor& up) {
    const Tensor& xin = t.value(ida);
    Tensor& ga = t.accumulate(ida);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += up[i] * std::exp(xin[i * n + j] - lse[i]);
  });
}

Var l2_normalize(Var a) {
  const Tensor& x = a.value();
  if (x.rank() != 1 && x.rank() != 2) {
    throw ShapeError("l2_normalize: expected vector or matrix, got " + shape_str(x.shape()));
  }
  const std::size_t m = x.rank() == 1 ? 1 : x.shape()[0];
  const std::size_t n = x.rank() == 1 ? x.size() : x.shape()[1];
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[i * n + j] * x[i * n + j];
    const double nrm = std::sqrt(s);
    if (!(nrm > kNormFloor)) {
      throw DomainError("l2_normalize: norm " + std::to_string(nrm) +
                        " at or below floor 1e-12 (row " + std::to_string(i) + ")");
    }
    norms[i] = nrm;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] / nrm;
  }
  Tensor unit = out;
  const std::size_t ida = a.id();
  return a.tape()->record(std::move(out), {ida}, [=](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    // (I - u u^T) up / |v|
    for (std::size_t i = 0; i < m; ++i) {
      double proj = 0.0;
      for (std::size_t j = 0; j < n; ++j) proj += unit[i * n + j] * up[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += (up[i * n + j] - unit[i * n + j] * proj) / norms[i];
    }
  });
}

Var cosine_sim(Var u, Var w) { return dot(l2_normalize(u), l2_normalize(w)); }

Var gather(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  if (x.rank() != 1 && x.rank() != 2) {
    throw ShapeError("gather: expected vector or matrix, got " + shape_str(x.shape()));
  }
  const std::size_t rows = x.shape()[0];
  const std::size_t width = x.rank() == 1 ? 1 : x.shape()[1];
  for (std::size_t r : index) {
    if (r >= rows) {
      throw DomainError("gather: index " + std::to_string(r) + " out of range " +
                        std::to_string(rows));
    }
  }
  Shape shape = x.shape();
  shape[0] = index.size();
  Tensor out = Tensor::zeros(shape);
  for (std::size_t k = 0; k < index.size(); ++k)
    for (std::size_t j = 0; j < width; ++j) out[k * width + j] = x[index[k] * width + j];
  const std::size_t ida = a.id();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->record(std::move(out), {ida},
                          [ida, width, idx = std::move(idx)](Tape& t, const Tensor& up) {
                            Tensor& ga = t.accumulate(ida);
                            for (std::size_t k = 0; k < idx.size(); ++k)
                              for (std::size_t j = 0; j < width; ++j)
                                ga[idx[k] * width + j] += up[k * width + j];
                          });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  require_rank("pick", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (cols.size() != m) {
    throw ShapeError("pick: " + std::to_string(cols.size()) + " columns for " +
                     std::to_string(m) + " rows");
  }
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    if (cols[i] >= n) throw DomainError("pick: column out of range");
    out[i] = x[i * n + cols[i]];
  }
  const std::size_t ida = a.id();
  std::vector<std::size_t> c(cols.begin(), cols.end());
  return a.tape()->record(std::move(out), {ida},
                          [ida, n, c = std::move(c)](Tape& t, const Tensor& up) {
                            Tensor& ga = t.accumulate(ida);
                            for (std::size_t i = 0; i < c.size(); ++i) ga[i * n + c[i]] += up[i];
                          });
}

Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t n_segments) {
  require_rank("segment_sum", a, 1);
  if (segment.size() != a.value().size()) {
    throw ShapeError("segment_sum: segment ids do not match input length");
  }
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros({n_segments});
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment[k] >= n_segments) throw DomainError("segment_sum: segment id out of range");
    out[segment[k]] += x[k];
  }
  const std::size_t ida = a.id();
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return a.tape()->record(std::move(out), {ida},
                          [ida, seg = std::move(seg)](Tape& t, const Tensor& up) {
                            Tensor& ga = t.accumulate(ida);
                            for (std::size_t k = 0; k < seg.size(); ++k) ga[k] += up[seg[k]];
                          });
}

Var grad_reverse(Var a, double lambda) {
  if (lambda < 0.0) throw DomainError("grad_reverse: lambda must be >= 0");
  const std::size_t ida = a.id();
  return a.tape()->record(a.value(), {ida}, [ida, lambda](Tape& t, const Tensor& up) {
    Tensor& ga = t.accumulate(ida);
    for (std::size_t k = 0; k < up.size(); ++k) ga[k] += -lambda * up[k];
  });
}

double grad_check(const ScalarFn& f, std::span<const Tensor> leaves, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return grad_check(f, leaves, options);
}

double grad_check(const ScalarFn& f, std::span<const Tensor> leaves,
                  const GradCheckOptions& options) {
  const double eps = options.eps;
  if (!(eps > 0.0 && eps <= 1e-3)) throw DomainError("grad_check: eps must be in (0, 1e-3]");

  std::vector<Tensor> current(leaves.begin(), leaves.end());
  const ScalarFn& numeric = options.numeric ? options.numeric : f;
  auto evaluate = [&](Tape& tape, std::vector<Var>& vars, const ScalarFn& fn) {
    vars.clear();
    for (const Tensor& leaf : current) vars.push_back(tape.param(leaf));
    Var out = fn(tape, vars);
    if (out.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
    if (!out.value().all_finite()) throw NumericError("grad_check: non-finite function value");
    return out;
  };

  Tape tape;
  std::vector<Var> vars;
  Var out = evaluate(tape, vars, f);
  tape.backward(out);
  std::vector<Tensor> analytic;
  for (Var v : vars) analytic.push_back(tape.grad(v));

  auto value_at = [&]() {
    Tape t;
    std::vector<Var> vs;
    return evaluate(t, vs, numeric).value().item();
  };

  double worst = 0.0;
  for (std::size_t l = 0; l < current.size(); ++l) {
    for (std::size_t k = 0; k < current[l].size(); ++k) {
      const double saved = current[l][k];
      auto at = [&](double h) {
        current[l][k] = saved + h;
        const double v = value_at();
        current[l][k] = saved;
        return v;
      };
      double central = 0.0;
      if (options.five_point) {
        central = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      } else {
        central = (at(eps) - at(-eps)) / (2.0 * eps);
      }
      const double a = options.flip_analytic ? -analytic[l][k] : analytic[l][k];
      if (!std::isfinite(a) || !std::isfinite(central)) {
        throw NumericError("grad_check: non-finite gradient");
      }
      const double denom = std::max({std::abs(a), std::abs(central), 1e-12});
      worst = std::max(worst, std::abs(a - central) / denom);
    }
  }
  return worst;
}

}  // namespace ordcon::ad
