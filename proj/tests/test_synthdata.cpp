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

#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ordcon/errors.hpp"
#include "ordcon/metrics.hpp"
#include "ordcon/rng.hpp"
#include "ordcon/synthdata.hpp"

using namespace ordcon;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small(std::size_t n = 200) {
  SyntheticSpec s;
  s.n_samples = n;
  s.n_identities = 10;
  s.age_lo = 16;
  s.age_hi = 45;
  s.input_dim = 8;
  s.warp_seed = 3;
  s.sample_seed = 4;
  return s;
}

const AgeGroupScheme kFiveGroups{6, 16};  // 16-21, ..., 40-45

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / ("ordcon_test_" + std::string(name));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

}  // namespace

TEST_CASE("generation is deterministic and respects its settings") {
  const SyntheticSpec s = small();
  const Dataset a = generate(s);
  CHECK(a == generate(s));
  CHECK(a.size() == 200);
  for (const Sample& x : a.samples) {
    CHECK(x.x.size() == 8);
    CHECK(x.y_age >= 16);
    CHECK(x.y_age <= 45);
    CHECK(x.y_id >= 0);
    CHECK(x.y_id < 10);
  }
  SyntheticSpec other = s;
  other.sample_seed = 5;
  CHECK_FALSE(generate(other) == a);
}

TEST_CASE("data settings validation names the field") {
  SyntheticSpec s = small();
  s.age_lo = 50;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("age_lo"), ConfigError);
  s = small();
  s.n_identities = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = small();
  s.noise_sigma = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("noise-free inputs depend only on age and identity") {
  SyntheticSpec s = small(400);
  s.noise_sigma = 0;
  const SyntheticGenerator g(s);
  const Dataset d = g.generate();
  for (const Sample& x : d.samples) CHECK(x.x == g.clean_input(x.y_age, x.y_id));
}

TEST_CASE("every age appears at 50 samples per age") {
  SyntheticSpec s = small(50 * 30);
  const Dataset d = generate(s);
  std::set<int> ages;
  for (const Sample& x : d.samples) ages.insert(x.y_age);
  CHECK(ages.size() == 30);
}

TEST_CASE("age map is injective per identity") {
  for (std::uint64_t w = 0; w < 20; ++w) {
    SyntheticSpec s;
    s.noise_sigma = 0;
    s.warp_seed = w;
    const SyntheticGenerator g(s);
    std::set<std::vector<double>> seen;
    for (int a = s.age_lo; a <= s.age_hi; ++a) seen.insert(g.clean_input(a, 0));
    CHECK(seen.size() == std::size_t(s.age_hi - s.age_lo + 1));
  }
}

TEST_CASE("first principal component is monotone in age for most warps") {
  int monotone = 0;
  for (std::uint64_t w = 0; w < 20; ++w) {
    SyntheticSpec s;
    s.noise_sigma = 0;
    s.warp_seed = w;
    const SyntheticGenerator g(s);
    const std::size_t n = std::size_t(s.age_hi - s.age_lo + 1);
    Tensor x = Tensor::zeros({n, s.input_dim});
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = g.clean_input(s.age_lo + int(i), 1);
      for (std::size_t k = 0; k < s.input_dim; ++k) x.at(i, k) = row[k];
    }
    const PcaResult p = pca_project(x, 1);
    bool up = true, down = true;
    for (std::size_t i = 1; i < n; ++i) {
      up = up && p.projected.at(i, 0) > p.projected.at(i - 1, 0);
      down = down && p.projected.at(i, 0) < p.projected.at(i - 1, 0);
    }
    monotone += up || down;
  }
  CHECK(monotone >= 18);
}

TEST_CASE("groups and centres") {
  CHECK(group_labels(kFiveGroups, 16, 45) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(group_center_age(kFiveGroups, 0, 16, 45) == 18);
  const AgeGroupScheme six{6, 0};
  CHECK(group_labels(six, 16, 77) == std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  // group 2 spans 12-17, clipped to 16-17
  const int c = group_center_age(six, 2, 16, 77);
  CHECK(c >= 16);
  CHECK(c <= 17);
  CHECK(six.group_of(group_center_age(six, 12, 16, 77)) == 12);
}

TEST_CASE("synth_across_groups") {
  const SyntheticSpec s = small();
  const Dataset d = generate(s);
  const Sample& x = d.samples[0];
  const auto out = synth_across_groups(x, kFiveGroups, s);
  CHECK(out.size() == 4);
  std::set<int> groups;
  for (const Sample& t : out) {
    CHECK(t.y_id == x.y_id);
    groups.insert(kFiveGroups.group_of(t.y_age));
  }
  CHECK(groups.size() == 4);
  CHECK_FALSE(groups.count(kFiveGroups.group_of(x.y_age)));
  CHECK(out == synth_across_groups(x, kFiveGroups, s));

  Sample stranger = x;
  stranger.y_id = 99;
  CHECK_THROWS_AS(synth_across_groups(stranger, kFiveGroups, s), DomainError);
}

TEST_CASE("noise-free synthesis equals direct generation") {
  SyntheticSpec s = small();
  s.noise_sigma = 0;
  const SyntheticGenerator g(s);
  const Dataset d = g.generate();
  for (int i = 0; i < 10; ++i) {
    const Sample& x = d.samples[std::size_t(i)];
    for (const Sample& t : g.synth_across_groups(x, kFiveGroups)) CHECK(t.x == g.clean_input(t.y_age, x.y_id));
  }
}

TEST_CASE("sample_batch") {
  const Dataset d = generate(small());
  const LabeledBatch a = sample_batch(d, 4, 11, BatchMode::kAge);
  CHECK(a.size() == 4);
  CHECK(a.x.shape() == Shape{4, 8});
  CHECK(sample_batch(d, 4, 11, BatchMode::kAge).x == a.x);
  const LabeledBatch f = sample_batch(d, 4, 11, BatchMode::kAifr, &kFiveGroups);
  CHECK(f.size() == 20);
  CHECK(f.y_group.size() == 20);
  CHECK_THROWS_AS(sample_batch(d, 201, 1, BatchMode::kAge), DomainError);
  CHECK_THROWS_AS(sample_batch(d, 1, 1, BatchMode::kAge), DomainError);

  int distinct = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto i1 = sample_indices(d.size(), 4, derive_seed(t, 1));
    auto i2 = sample_indices(d.size(), 4, derive_seed(t, 2));
    distinct += i1 != i2;
    CHECK(std::set<std::size_t>(i1.begin(), i1.end()).size() == 4);
  }
  CHECK(distinct >= 99);
}

TEST_CASE("csv round trip") {
  const fs::path dir = temp_dir("csv");
  Dataset d = generate(small(10));
  save_csv(d, dir / "d.csv");
  CHECK(fs::exists(dir / "d.json"));
  const Dataset back = load_csv(dir / "d.csv");
  CHECK(approx_equal(back, d, 1e-12));
  CHECK(back.spec == d.spec);
}

TEST_CASE("csv errors and boundaries") {
  const fs::path dir = temp_dir("csv_bad");
  write(dir / "short.csv", "y_age,y_id,x_0,x_1\n20,1,0.5,0.25\n21,2,0.5\n");
  CHECK_THROWS_WITH_AS(load_csv(dir / "short.csv"), doctest::Contains(":3:"), IoError);
  write(dir / "bad.csv", "y_age,y_id,x_0\n2x,1,0.5\n");
  CHECK_THROWS_AS(load_csv(dir / "bad.csv"), IoError);
  write(dir / "header.csv", "y_age,y_id,x_0,x_1\n");
  const Dataset empty = load_csv(dir / "header.csv");
  CHECK(empty.size() == 0);
  CHECK(empty.input_dim() == 2);
  write(dir / "noheader.csv", "");
  CHECK_THROWS_AS(load_csv(dir / "noheader.csv"), IoError);
  CHECK_THROWS_AS(load_csv(dir / "missing.csv"), IoError);
}

TEST_CASE("split_by_identity keeps identities apart") {
  const Dataset d = generate(small());
  const Split s = split_by_identity(d, 0.2, 9);
  CHECK(s.train.size() + s.test.size() == d.size());
  std::set<int> train_ids, test_ids;
  for (const Sample& x : s.train.samples) train_ids.insert(x.y_id);
  for (const Sample& x : s.test.samples) test_ids.insert(x.y_id);
  CHECK(test_ids.size() == 2);
  for (int id : test_ids) CHECK_FALSE(train_ids.count(id));
  CHECK_THROWS_AS(split_by_identity(d, 1.0, 9), ConfigError);
}
