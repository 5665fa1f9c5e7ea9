// Copyright 2026 The tomored Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tomored {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed derivation: derive_seed(master, t, k) names stream k of
/// trial t. The result depends only on the arguments, so trials may run in any
/// order or in parallel.
constexpr Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> path) noexcept {
  Seed s = mix64(master);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

constexpr Seed derive_seed(Seed master, std::uint64_t a) noexcept {
  return derive_seed(master, {a});
}

constexpr Seed derive_seed(Seed master, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(master, {a, b});
}

inline Rng make_rng(Seed seed) { return Rng(seed); }

}  // namespace tomored
