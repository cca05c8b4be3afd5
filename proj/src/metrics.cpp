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

#include "ordcon/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "ordcon/errors.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

namespace {

std::vector<double> unit(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (!(n > 1e-12)) throw DomainError("cosine on a zero-norm vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

std::vector<double> diff_unit(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return unit(d);
}

double dotp(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double mae(std::span<const double> preds, std::span<const double> labels) {
  if (preds.size() != labels.size()) {
    throw ShapeError("mae: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw ShapeError("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - labels[i]);
  return s / static_cast<double>(preds.size());
}

double order_consistency(const Tensor& features, std::span<const int> labels,
                         const ProxyBank& bank) {
  const std::size_t n = labels.size();
  if (features.rank() != 2 || features.rows() != n) throw ShapeError("order_consistency: shape mismatch");
  const Tensor& c = bank.proxies();
  std::map<std::pair<int, int>, std::vector<double>> dir_cache;
  auto dir = [&](int a, int b) -> const std::vector<double>& {
    auto it = dir_cache.find({a, b});
    if (it != dir_cache.end()) return it->second;
    return dir_cache[{a, b}] = diff_unit(c.row(bank.row_of(a)), c.row(bank.row_of(b)));
  };
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = features.row(i);

  std::size_t total = 0, good = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(labels[i] < labels[j])) continue;
      std::vector<double> d(rows[i].size());
      double s = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        d[k] = rows[i][k] - rows[j][k];
        s += d[k] * d[k];
      }
      if (!(std::sqrt(s) > 1e-12)) continue;
      const ReferencePairs refs = reference_pairs(labels[i], labels[j], Relation::kProgressive);
      const auto& vf = dir(refs.forward.first, refs.forward.second);
      const auto& vb = dir(refs.backward.first, refs.backward.second);
      ++total;
      if (dotp(d, vf) > dotp(d, vb)) ++good;
    }
  }
  if (total == 0) throw DomainError("order_consistency: no progressive pair");
  return static_cast<double>(good) / static_cast<double>(total);
}

double rank1_accuracy(const Tensor& gallery, std::span<const int> gallery_ids, const Tensor& probe,
                      std::span<const int> probe_ids) {
  if (gallery_ids.empty()) throw DomainError("rank1_accuracy: empty gallery");
  if (gallery.rows() != gallery_ids.size() || probe.rows() != probe_ids.size() ||
      gallery.cols() != probe.cols()) {
    throw ShapeError("rank1_accuracy: shape mismatch");
  }
  if (probe_ids.empty()) throw DomainError("rank1_accuracy: empty probe set");
  std::vector<std::vector<double>> g(gallery_ids.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = unit(gallery.row(i));
  std::size_t hits = 0;
  for (std::size_t p = 0; p < probe_ids.size(); ++p) {
    const std::vector<double> q = unit(probe.row(p));
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = dotp(q, g[i]);
      if (s > best_sim) {
        best_sim = s;
        best = i;
      }
    }
    if (gallery_ids[best] == probe_ids[p]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probe_ids.size());
}

double age_probe_accuracy(const Tensor& features, std::span<const int> groups, std::uint64_t seed) {
  const std::size_t n = groups.size();
  if (features.rank() != 2 || features.rows() != n) throw ShapeError("age_probe_accuracy: shape mismatch");
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < n; ++i) by_group[groups[i]].push_back(i);
  if (by_group.size() < 2) throw DomainError("age_probe_accuracy: need at least two groups");

  Rng rng(derive_seed(seed, stream::kProbe));
  std::vector<std::size_t> train, test;
  std::map<int, std::size_t> cls;
  for (auto& [g, idx] : by_group) {
    const std::size_t c = cls.size();
    cls[g] = c;
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t half = idx.size() / 2;
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
  }
  if (train.size() < 2 || test.empty()) throw DomainError("age_probe_accuracy: insufficient data");

  const std::size_t d = features.cols();
  const std::size_t n_cls = cls.size();
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t i : train)
    for (std::size_t k = 0; k < d; ++k) mu[k] += features.at(i, k);
  for (double& m : mu) m /= double(train.size());
  for (std::size_t i : train)
    for (std::size_t k = 0; k < d; ++k) sd[k] += std::pow(features.at(i, k) - mu[k], 2);
  for (double& s : sd) {
    s = std::sqrt(s / double(train.size()));
    if (!(s > 1e-12)) s = 1.0;
  }
  auto standardized = [&](std::size_t i, std::size_t k) { return (features.at(i, k) - mu[k]) / sd[k]; };

  std::vector<double> w(d * n_cls, 0.0), b(n_cls, 0.0);
  std::vector<double> gw(d * n_cls), gb(n_cls), logits(n_cls);
  constexpr int kIterations = 400;
  constexpr double kLr = 0.5;
  constexpr double kL2 = 1e-4;
  const double inv_n = 1.0 / double(train.size());
  for (int it = 0; it < kIterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i : train) {
      double mx = -1e300;
      for (std::size_t c = 0; c < n_cls; ++c) {
        logits[c] = b[c];
        for (std::size_t k = 0; k < d; ++k) logits[c] += standardized(i, k) * w[k * n_cls + c];
        mx = std::max(mx, logits[c]);
      }
      double z = 0.0;
      for (double& l : logits) z += (l = std::exp(l - mx));
      const std::size_t y = cls[groups[i]];
      for (std::size_t c = 0; c < n_cls; ++c) {
        const double r = (logits[c] / z - (c == y ? 1.0 : 0.0)) * inv_n;
        gb[c] += r;
        for (std::size_t k = 0; k < d; ++k) gw[k * n_cls + c] += r * standardized(i, k);
      }
    }
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= kLr * (gw[q] + kL2 * w[q]);
    for (std::size_t c = 0; c < n_cls; ++c) b[c] -= kLr * gb[c];
  }

  std::size_t hits = 0;
  for (std::size_t i : test) {
    std::size_t best = 0;
    double best_logit = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c) {
      double l = b[c];
      for (std::size_t k = 0; k < d; ++k) l += standardized(i, k) * w[k * n_cls + c];
      if (c == 0 || l > best_logit) {
        best_logit = l;
        best = c;
      }
    }
    if (best == cls[groups[i]]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

PcaResult pca_project(const Tensor& features, std::size_t k) {
  if (features.rank() != 2) throw ShapeError("pca_project: expected a matrix");
  const std::size_t n = features.rows(), d = features.cols();
  if (k == 0 || k > d) throw DomainError("pca_project: k must be in [1, dim]");
  if (n < k + 1) throw DomainError("pca_project: need at least k + 1 samples");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = features.at(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd evals = solver.eigenvalues();   // ascending
  const Eigen::MatrixXd evecs = solver.eigenvectors();
  const double total = std::max(0.0, cov.trace());
  const double top = std::max(0.0, evals(d - 1));

  PcaResult out;
  out.projected = Tensor::zeros({n, k});
  out.components = Tensor::zeros({k, d});
  out.explained_ratio.assign(k, 0.0);
  out.mean.assign(mean.data(), mean.data() + d);
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - c);
    const double lambda = evals(col);
    if (!(top > 0.0) || lambda <= 1e-12 * top) continue;
    Eigen::VectorXd v = evecs.col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) out.projected.at(i, c) = proj(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < d; ++j) out.components.at(c, j) = v(static_cast<Eigen::Index>(j));
    out.explained_ratio[c] = total > 0.0 ? lambda / total : 0.0;
  }
  return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("spearman: need two equal-length series");
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / double(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / double(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ordcon
