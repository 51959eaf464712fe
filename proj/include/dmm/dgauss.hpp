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

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dmm/rng.hpp"

namespace dmm {

// Client noise distribution: the discrete Gaussian N_Z(0, s^2) with mass
// proportional to exp(-x^2 / 2s^2) on the integers.  Sampled exactly by
// rejection from a discrete Laplace, so there is no truncation parameter;
// the only approximation is double-precision evaluation of the Bernoulli
// parameters exp(-gamma), whose total-variation effect is ~2^-53 per draw
// and far below any test tolerance used here.
struct NoiseSpec {
  double scale = 1.0;  // s = sigma / gamma
  int dim = 1;         // per-client per-iteration coordinate count
};

class DiscreteGaussianSampler {
 public:
  explicit DiscreteGaussianSampler(double scale) : s_(scale) {
    // The privacy analysis requires scale >= 1/2.
    if (!(scale >= 0.5)) throw std::invalid_argument("discrete Gaussian scale must be >= 1/2");
  }

  double scale() const { return s_; }

  std::int64_t sample(Rng& rng) const {
    const std::int64_t t = static_cast<std::int64_t>(std::floor(s_)) + 1;
    for (;;) {
      std::int64_t y = sample_discrete_laplace(t, rng);
      double diff = std::abs(static_cast<double>(y)) - s_ * s_ / static_cast<double>(t);
      if (bernoulli_exp(diff * diff / (2.0 * s_ * s_), rng)) return y;
    }
  }

  // P[true] = exp(-g) for any g >= 0, built from Bernoulli(g/k) draws.
  static bool bernoulli_exp(double g, Rng& rng) {
    if (g < 0) throw std::invalid_argument("bernoulli_exp needs g >= 0");
    while (g > 1.0) {
      if (!bernoulli_exp_le1(1.0, rng)) return false;
      g -= 1.0;
    }
    return bernoulli_exp_le1(g, rng);
  }

 private:
  static bool bernoulli_exp_le1(double g, Rng& rng) {
    // K = first k with Bernoulli(g/k) = 0; return true iff K is odd.
    int k = 1;
    while (rng.next_unit() < g / static_cast<double>(k)) ++k;
    return (k % 2) == 1;
  }

  // P[X = x] proportional to exp(-|x|/t), exact up to the Bernoulli calls.
  static std::int64_t sample_discrete_laplace(std::int64_t t, Rng& rng) {
    for (;;) {
      std::uint64_t u = rng.uniform_below(static_cast<std::uint64_t>(t));
      if (!bernoulli_exp(static_cast<double>(u) / static_cast<double>(t), rng)) continue;
      std::int64_t v = 0;
      while (bernoulli_exp_le1(1.0, rng)) ++v;
      std::int64_t x = static_cast<std::int64_t>(u) + t * v;
      bool negative = rng.next_bit();
      if (negative && x == 0) continue;
      return negative ? -x : x;
    }
  }

  double s_;
};

}  // namespace dmm
