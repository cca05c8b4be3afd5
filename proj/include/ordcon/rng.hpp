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
#include <random>

namespace ordcon {

using Rng = std::mt19937_64;

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child seed for an independent stream. Streams derived from the same root
// with different tags (or counters) do not overlap in practice.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix64(mix64(root) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                    std::uint64_t counter) {
  return derive_seed(derive_seed(root, stream), counter);
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t kWarp = 1;
inline constexpr std::uint64_t kSamples = 2;
inline constexpr std::uint64_t kModel = 3;
inline constexpr std::uint64_t kProxies = 4;
inline constexpr std::uint64_t kTrain = 5;
inline constexpr std::uint64_t kSplit = 6;
inline constexpr std::uint64_t kProbe = 7;
inline constexpr std::uint64_t kSynth = 8;
}  // namespace stream

}  // namespace ordcon
