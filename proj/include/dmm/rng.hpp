// Copyright 2026 The DMM-LRP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
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

#include "dmm/field.hpp"

namespace dmm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stable derivation of independent stream seeds from a master seed and a
// path of integer components (iteration, party slot, purpose tag, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = master ^ 0xD6E8FEB86659FD93ULL;
  splitmix64(state);
  for (std::uint64_t component : path) {
    state ^= component + 0x165667B19E3779F9ULL;
    splitmix64(state);
  }
  return splitmix64(state);
}

// Deterministic stream; all protocol randomness flows through explicit Rng
// instances so runs are reproducible from the master seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  bool next_bit() { return (gen_() >> 63) != 0; }

  // Uniform double in [0, 1) with 53 bits.
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform draw from {0, ..., n-1}.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t uniform_field(const Field& f) { return uniform_below(f.modulus()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dmm
