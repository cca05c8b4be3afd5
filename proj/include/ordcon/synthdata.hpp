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

// Seeded synthetic stand-in for labelled face data. Every sample is a latent
// (age, identity) pair pushed through a fixed random two-layer tanh warp:
//
//   x = W2 tanh(W1 [age_scaled; id_embed] + b1) + noise
//
// The warp (W1, b1, W2 and the identity embeddings) is drawn once from
// warp_seed; the sample draws and the noise come from sample_seed, one
// counter-derived stream per sample, so generation does not depend on
// iteration order.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ordcon/proxy_bank.hpp"
#include "ordcon/tensor.hpp"

namespace ordcon {

struct SyntheticSpec {
  std::size_t n_samples = 2000;
  std::size_t n_identities = 50;
  int age_lo = 16;
  int age_hi = 77;
  std::size_t input_dim = 32;
  double noise_sigma = 0.05;
  std::uint64_t warp_seed = 0;
  std::uint64_t sample_seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct Sample {
  std::vector<double> x;
  int y_age = 0;
  int y_id = 0;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  SyntheticSpec spec;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t input_dim() const { return spec.input_dim; }
  bool operator==(const Dataset&) const = default;
};

// Datasets equal up to `tol` per input value.
bool approx_equal(const Dataset& a, const Dataset& b, double tol);

class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(SyntheticSpec spec);

  const SyntheticSpec& spec() const { return spec_; }

  // Noise-free input for a latent (age, identity).
  std::vector<double> clean_input(int age, int id) const;
  Dataset generate() const;

  // One sample per age group other than s's own, same identity, age set to
  // the centre of the group's span clipped to [age_lo, age_hi], with fresh
  // noise. Groups cover [age_lo, age_hi].
  std::vector<Sample> synth_across_groups(const Sample& s, const AgeGroupScheme& scheme) const;

 private:
  SyntheticSpec spec_;
  std::size_t hidden_ = 0;
  std::size_t embed_ = 0;
  std::vector<double> w1_;        // hidden x (1 + embed)
  std::vector<double> b1_;        // hidden
  std::vector<double> w2_;        // input_dim x hidden
  std::vector<double> id_embed_;  // n_identities x embed
};

Dataset generate(const SyntheticSpec& spec);
std::vector<Sample> synth_across_groups(const Sample& s, const AgeGroupScheme& scheme,
                                        const SyntheticSpec& spec);

// Age groups spanned by [age_lo, age_hi] and the representative age of each.
std::vector<int> group_labels(const AgeGroupScheme& scheme, int age_lo, int age_hi);
int group_center_age(const AgeGroupScheme& scheme, int group, int age_lo, int age_hi);

enum class BatchMode { kAge, kAifr };

struct LabeledBatch {
  Tensor x;  // (N x input_dim)
  std::vector<int> y_age;
  std::vector<int> y_id;
  std::vector<int> y_group;  // filled in aifr mode
  std::size_t size() const { return y_age.size(); }
};

// Stack `indices` of d into a batch. In aifr mode every sample is followed by
// its synth_across_groups expansion.
LabeledBatch make_batch(const Dataset& d, std::span<const std::size_t> indices, BatchMode mode,
                        const AgeGroupScheme* scheme = nullptr,
                        const SyntheticGenerator* generator = nullptr);

// Uniform draw of `size` distinct samples.
LabeledBatch sample_batch(const Dataset& d, std::size_t size, std::uint64_t seed, BatchMode mode,
                          const AgeGroupScheme* scheme = nullptr);
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t size, std::uint64_t seed);

// Columns: y_age, y_id, x_0 ... x_{input_dim-1}; header row required.
void save_csv(const Dataset& d, const std::filesystem::path& path);
// Reads the CSV and, when present, the spec sidecar (same stem, .json).
Dataset load_csv(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Split by identity: a `fraction` of identities (at least one) is held out.
struct Split {
  Dataset train;
  Dataset test;
};
Split split_by_identity(const Dataset& d, double fraction, std::uint64_t seed);

}  // namespace ordcon
