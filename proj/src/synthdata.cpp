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

#include "ordcon/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ordcon/config.hpp"
#include "ordcon/errors.hpp"
#include "ordcon/exports.hpp"
#include "ordcon/rng.hpp"

namespace ordcon {

namespace {

constexpr std::size_t kWarpHidden = 48;
constexpr std::size_t kIdEmbed = 8;
constexpr double kAgeGain = 2.5;

std::uint64_t hash_sample(const Sample& s) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(s.y_id) * 0x100000001b3ULL +
                          static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y_age)));
  for (double v : s.x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (age_lo >= age_hi) {
    throw ConfigError("data.age_lo: must be < data.age_hi (got " + std::to_string(age_lo) +
                      " >= " + std::to_string(age_hi) + ")");
  }
  if (n_identities < 1) throw ConfigError("data.n_identities: must be >= 1");
  if (input_dim < 1) throw ConfigError("data.input_dim: must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("data.noise_sigma: must be >= 0");
}

bool approx_equal(const Dataset& a, const Dataset& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Sample& s = a.samples[i];
    const Sample& t = b.samples[i];
    if (s.y_age != t.y_age || s.y_id != t.y_id || s.x.size() != t.x.size()) return false;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!(std::abs(s.x[k] - t.x[k]) <= tol)) return false;
    }
  }
  return true;
}

SyntheticGenerator::SyntheticGenerator(SyntheticSpec spec)
    : spec_(std::move(spec)), hidden_(kWarpHidden), embed_(kIdEmbed) {
  spec_.validate();
  Rng rng(derive_seed(spec_.warp_seed, stream::kWarp));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t in = 1 + embed_;
  w1_.resize(hidden_ * in);
  for (std::size_t h = 0; h < hidden_; ++h) {
    w1_[h * in] = kAgeGain * normal(rng);
    for (std::size_t e = 1; e < in; ++e) w1_[h * in + e] = normal(rng) / std::sqrt(double(embed_));
  }
  b1_.resize(hidden_);
  for (double& v : b1_) v = 0.5 * normal(rng);
  w2_.resize(spec_.input_dim * hidden_);
  for (double& v : w2_) v = normal(rng) / std::sqrt(double(hidden_));
  id_embed_.resize(spec_.n_identities * embed_);
  for (double& v : id_embed_) v = normal(rng);
}

std::vector<double> SyntheticGenerator::clean_input(int age, int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= spec_.n_identities) {
    throw DomainError("synthetic generator: unknown identity " + std::to_string(id));
  }
  const double age_scaled =
      static_cast<double>(age - spec_.age_lo) / static_cast<double>(spec_.age_hi - spec_.age_lo);
  const std::size_t in = 1 + embed_;
  std::vector<double> h(hidden_);
  const double* emb = &id_embed_[static_cast<std::size_t>(id) * embed_];
  for (std::size_t r = 0; r < hidden_; ++r) {
    double a = b1_[r] + w1_[r * in] * age_scaled;
    for (std::size_t e = 0; e < embed_; ++e) a += w1_[r * in + 1 + e] * emb[e];
    h[r] = std::tanh(a);
  }
  std::vector<double> x(spec_.input_dim, 0.0);
  for (std::size_t k = 0; k < spec_.input_dim; ++k)
    for (std::size_t r = 0; r < hidden_; ++r) x[k] += w2_[k * hidden_ + r] * h[r];
  return x;
}

Dataset SyntheticGenerator::generate() const {
  Dataset d;
  d.spec = spec_;
  d.samples.resize(spec_.n_samples);
  for (std::size_t i = 0; i < spec_.n_samples; ++i) {
    Rng rng(derive_seed(spec_.sample_seed, stream::kSamples, i));
    std::uniform_int_distribution<int> age(spec_.age_lo, spec_.age_hi);
    std::uniform_int_distribution<int> id(0, static_cast<int>(spec_.n_identities) - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    Sample& s = d.samples[i];
    s.y_age = age(rng);
    s.y_id = id(rng);
    s.x = clean_input(s.y_age, s.y_id);
    if (spec_.noise_sigma > 0.0) {
      for (double& v : s.x) v += spec_.noise_sigma * noise(rng);
    }
  }
  return d;
}

std::vector<int> group_labels(const AgeGroupScheme& scheme, int age_lo, int age_hi) {
  std::vector<int> out;
  for (int g = scheme.group_of(age_lo); g <= scheme.group_of(age_hi); ++g) out.push_back(g);
  return out;
}

int group_center_age(const AgeGroupScheme& scheme, int group, int age_lo, int age_hi) {
  const int lo = std::max(scheme.group_lo(group), age_lo);
  const int hi = std::min(scheme.group_hi(group), age_hi);
  if (lo > hi) throw DomainError("group " + std::to_string(group) + " outside the age range");
  return lo + (hi - lo) / 2;
}

std::vector<Sample> SyntheticGenerator::synth_across_groups(const Sample& s,
                                                            const AgeGroupScheme& scheme) const {
  if (s.y_id < 0 || static_cast<std::size_t>(s.y_id) >= spec_.n_identities) {
    throw DomainError("synth_across_groups: unknown identity " + std::to_string(s.y_id));
  }
  const int own = scheme.group_of(s.y_age);
  std::vector<Sample> out;
  for (int g : group_labels(scheme, spec_.age_lo, spec_.age_hi)) {
    if (g == own) continue;
    Sample t;
    t.y_id = s.y_id;
    t.y_age = group_center_age(scheme, g, spec_.age_lo, spec_.age_hi);
    t.x = clean_input(t.y_age, t.y_id);
    if (spec_.noise_sigma > 0.0) {
      Rng rng(derive_seed(spec_.sample_seed, stream::kSynth,
                          hash_sample(s) ^ static_cast<std::uint64_t>(g)));
      std::normal_distribution<double> noise(0.0, 1.0);
      for (double& v : t.x) v += spec_.noise_sigma * noise(rng);
    }
    out.push_back(std::move(t));
  }
  return out;
}

Dataset generate(const SyntheticSpec& spec) { return SyntheticGenerator(spec).generate(); }

std::vector<Sample> synth_across_groups(const Sample& s, const AgeGroupScheme& scheme,
                                        const SyntheticSpec& spec) {
  return SyntheticGenerator(spec).synth_across_groups(s, scheme);
}

LabeledBatch make_batch(const Dataset& d, std::span<const std::size_t> indices, BatchMode mode,
                        const AgeGroupScheme* scheme, const SyntheticGenerator* generator) {
  std::vector<const Sample*> rows;
  std::vector<Sample> synthesized;
  if (mode == BatchMode::kAifr) {
    if (!scheme) throw ConfigError("aifr batches need an age-group scheme");
    std::optional<SyntheticGenerator> local;
    if (!generator) generator = &local.emplace(d.spec);
    std::vector<std::vector<Sample>> expansions;
    for (std::size_t i : indices) expansions.push_back(generator->synth_across_groups(d.samples.at(i), *scheme));
    std::size_t total = 0;
    for (const auto& e : expansions) total += e.size();
    synthesized.reserve(total);
    for (auto& e : expansions)
      for (auto& s : e) synthesized.push_back(std::move(s));
    std::size_t k = 0;
    for (std::size_t n = 0; n < indices.size(); ++n) {
      rows.push_back(&d.samples.at(indices[n]));
      for (std::size_t e = 0; e < expansions[n].size(); ++e) rows.push_back(&synthesized[k++]);
    }
  } else {
    for (std::size_t i : indices) rows.push_back(&d.samples.at(i));
  }

  const std::size_t dim = d.input_dim();
  LabeledBatch b;
  b.x = Tensor::zeros({rows.size(), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r]->x.size() != dim) throw ShapeError("make_batch: sample dim mismatch");
    std::copy(rows[r]->x.begin(), rows[r]->x.end(), b.x.data() + r * dim);
    b.y_age.push_back(rows[r]->y_age);
    b.y_id.push_back(rows[r]->y_id);
    if (mode == BatchMode::kAifr) b.y_group.push_back(scheme->group_of(rows[r]->y_age));
  }
  return b;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (size > n) {
    throw DomainError("sample_batch: batch size " + std::to_string(size) +
                      " exceeds dataset size " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t k = 0; k < size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(size);
  return idx;
}

LabeledBatch sample_batch(const Dataset& d, std::size_t size, std::uint64_t seed, BatchMode mode,
                          const AgeGroupScheme* scheme) {
  if (size < 2) throw DomainError("sample_batch: size must be >= 2");
  const std::vector<std::size_t> idx = sample_indices(d.size(), size, seed);
  return make_batch(d, idx, mode, scheme);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "y_age,y_id";
  for (std::size_t k = 0; k < d.input_dim(); ++k) os << ",x_" << k;
  os << '\n';
  for (const Sample& s : d.samples) {
    os << s.y_age << ',' << s.y_id;
    for (double v : s.x) os << ',' << format_double(v);
    os << '\n';
  }
  atomic_write(path, os.str());
  atomic_write(sidecar_path(path), synthetic_spec_to_json(d.spec).dump(2) + "\n");
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ":1: missing header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "y_age" || header[1] != "y_id") {
    throw IoError(path.string() + ":1: header must start with y_age,y_id");
  }
  const std::size_t dim = header.size() - 2;

  Dataset d;
  const auto sidecar = sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    d.spec = synthetic_spec_from_json(nlohmann::json::parse(read_text(sidecar)));
    if (d.spec.input_dim != dim) {
      throw IoError(path.string() + ": dimension inconsistency, header has " +
                    std::to_string(dim) + " inputs but sidecar says " +
                    std::to_string(d.spec.input_dim));
    }
  } else {
    d.spec.input_dim = dim;
  }

  std::size_t lineno = 1;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (cells.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row, expected " +
                    std::to_string(header.size()) + " columns, got " +
                    std::to_string(cells.size()));
    }
    Sample s;
    auto parse_int = [&](const std::string& c, int& out) {
      const auto r = std::from_chars(c.data(), c.data() + c.size(), out);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad integer '" + c + "'");
      }
    };
    parse_int(cells[0], s.y_age);
    parse_int(cells[1], s.y_id);
    s.x.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string& c = cells[k + 2];
      const auto r = std::from_chars(c.data(), c.data() + c.size(), s.x[k]);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    max_id = std::max(max_id, s.y_id);
    d.samples.push_back(std::move(s));
  }
  if (!std::filesystem::exists(sidecar)) {
    d.spec.n_samples = d.samples.size();
    if (max_id >= 0) d.spec.n_identities = static_cast<std::size_t>(max_id) + 1;
    if (!d.samples.empty()) {
      auto [mn, mx] = std::minmax_element(d.samples.begin(), d.samples.end(),
                                          [](const Sample& a, const Sample& b) { return a.y_age < b.y_age; });
      d.spec.age_lo = mn->y_age;
      d.spec.age_hi = std::max(mx->y_age, mn->y_age + 1);
    }
  }
  return d;
}

Split split_by_identity(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("train.holdout_fraction: must be in (0, 1)");
  std::set<int> ids;
  for (const Sample& s : d.samples) ids.insert(s.y_id);
  std::vector<int> order(ids.begin(), ids.end());
  if (order.size() < 2) throw DomainError("split_by_identity: need at least two identities");
  Rng rng(derive_seed(seed, stream::kSplit));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_test = static_cast<std::size_t>(std::lround(fraction * double(order.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);
  const std::set<int> test_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  Split out{Dataset{d.spec, {}}, Dataset{d.spec, {}}};
  for (const Sample& s : d.samples) (test_ids.count(s.y_id) ? out.test : out.train).samples.push_back(s);
  out.train.spec.n_samples = out.train.size();
  out.test.spec.n_samples = out.test.size();
  return out;
}

}  // namespace ordcon
