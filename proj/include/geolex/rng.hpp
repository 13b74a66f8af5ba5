// Copyright 2026 The Geolex Authors.
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
#include <random>
#include <vector>

#include "geolex/hash.hpp"

namespace geolex {

// std::mt19937_64 is fully specified by the standard; the distributions are
// not. Sampling below uses explicit rejection so results are identical on
// every platform for a given seed.
using DetEngine = std::mt19937_64;

inline uint64_t uniform_below(DetEngine& eng, uint64_t n) {
  // Draw in [0, n) without modulo bias.
  if (n == 0) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

// Maps a 64-bit hash into (0, 1); never returns exactly 0 or 1.
inline double unit_double(uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// First k elements of a seeded Fisher-Yates shuffle of [0, n): a uniform
// sample without replacement, in selection order.
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, DetEngine& eng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(uniform_below(eng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace geolex
