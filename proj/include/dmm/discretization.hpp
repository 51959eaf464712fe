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
#include <span>
#include <stdexcept>
#include <vector>

#include "dmm/field.hpp"
#include "dmm/rng.hpp"

namespace dmm {

// Client-side gradient conditioning: clip and scale, flatten with a
// randomized-sign Walsh-Hadamard rotation, then conditionally round to the
// integer grid.  The server inverts the pipeline on the aggregate.

struct DiscretizationParams {
  double clip_norm = 1.0;      // c
  double granularity = 1.0;    // gamma
  double rounding_bias = 0.0;  // beta in [0, 1)
  int dim = 1;                 // d (model dimension)
  std::uint64_t flatten_seed = 0;
  int max_round_attempts = 10000;

  void validate() const {
    if (clip_norm <= 0 || granularity <= 0) throw std::invalid_argument("clip norm and granularity must be positive");
    if (rounding_bias < 0 || rounding_bias >= 1) throw std::invalid_argument("rounding bias must lie in [0,1)");
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
  }
};

// Acceptance ball radius for the conditional rounding of a dim-dimensional
// vector: min{ c/g + sqrt(d), sqrt(c^2/g^2 + d/4 + sqrt(2 ln(1/beta)) * (c/g + sqrt(d)/2)) }.
// beta = 0 disables the second branch.
inline double rounding_norm_bound(const DiscretizationParams& p, int dim) {
  double cg = p.clip_norm / p.granularity;
  double root_d = std::sqrt(static_cast<double>(dim));
  double first = cg + root_d;
  if (p.rounding_bias <= 0.0) return first;
  double second = std::sqrt(cg * cg + static_cast<double>(dim) / 4.0 +
                            std::sqrt(2.0 * std::log(1.0 / p.rounding_bias)) * (cg + root_d / 2.0));
  return std::min(first, second);
}

// (1/gamma) * min{1, c/||g||} * g; output norm is at most c/gamma.
inline std::vector<double> clip_scale(std::span<const double> g, const DiscretizationParams& p) {
  if (static_cast<int>(g.size()) != p.dim) throw std::invalid_argument("gradient dimension mismatch");
  double norm_sq = 0;
  for (double v : g) norm_sq += v * v;
  double norm = std::sqrt(norm_sq);
  double factor = (norm > p.clip_norm) ? p.clip_norm / norm : 1.0;
  factor /= p.granularity;
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * factor;
  return out;
}

// Random-sign diagonal followed by the normalized Walsh-Hadamard transform;
// orthogonal with sub-Gaussian rows (constant rho = 1 in the accounting).
struct FlattenSpec {
  int dim = 1;         // d
  int dim_padded = 1;  // d' = next power of two >= d
  std::vector<std::int8_t> signs;

  static FlattenSpec make(int dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    FlattenSpec spec;
    spec.dim = dim;
    spec.dim_padded = 1;
    while (spec.dim_padded < dim) spec.dim_padded <<= 1;
    spec.signs.resize(spec.dim_padded);
    Rng rng(derive_seed(seed, {0x464C4154ULL}));
    for (auto& s : spec.signs) s = rng.next_bit() ? -1 : 1;
    return spec;
  }
};

namespace detail {

inline void fwht_normalized(std::vector<double>& x) {
  const std::size_t n = x.size();
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t j = i; j < i + len; ++j) {
        double a = x[j], b = x[j + len];
        x[j] = a + b;
        x[j + len] = a - b;
      }
    }
  }
  double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : x) v *= scale;
}

}  // namespace detail

// x (length d, or already d') -> d' vector H D x / sqrt(d').
inline std::vector<double> flatten(std::span<const double> x, const FlattenSpec& spec) {
  if (static_cast<int>(x.size()) != spec.dim && static_cast<int>(x.size()) != spec.dim_padded) {
    throw std::invalid_argument("flatten input must have length d or d'");
  }
  std::vector<double> out(spec.dim_padded, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * spec.signs[i];
  detail::fwht_normalized(out);
  return out;
}

// Transpose map: y (length d') -> D H y / sqrt(d').  Truncation to d is the
// caller's concern (server_postprocess does it).
inline std::vector<double> unflatten(std::span<const double> y, const FlattenSpec& spec) {
  if (static_cast<int>(y.size()) != spec.dim_padded) throw std::invalid_argument("unflatten input must have length d'");
  std::vector<double> out(y.begin(), y.end());
  detail::fwht_normalized(out);
  for (int i = 0; i < spec.dim_padded; ++i) out[i] *= spec.signs[i];
  return out;
}

// One unconditional randomized-rounding attempt: each coordinate moves to
// floor or ceil with probability equal to the fractional part, so the result
// is a product distribution with mean x and per-coordinate distance < 1.
inline std::vector<std::int64_t> round_once(std::span<const double> x, Rng& rng) {
  std::vector<std::int64_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double flo = std::floor(x[i]);
    double frac = x[i] - flo;
    out[i] = static_cast<std::int64_t>(flo) + (rng.next_unit() < frac ? 1 : 0);
  }
  return out;
}

// Conditional randomized rounding: retry until the rounded vector lands in
// the acceptance ball.  Per-attempt rejection probability is at most the
// rounding bias, so the default retry budget is never a practical limit.
inline std::vector<std::int64_t> cond_round(std::span<const double> x, const DiscretizationParams& p, Rng& rng) {
  double bound = rounding_norm_bound(p, static_cast<int>(x.size()));
  double bound_sq = bound * bound;
  for (int attempt = 0; attempt < p.max_round_attempts; ++attempt) {
    auto rounded = round_once(x, rng);
    long double norm_sq = 0;
    for (auto v : rounded) norm_sq += static_cast<long double>(v) * static_cast<long double>(v);
    if (norm_sq <= static_cast<long double>(bound_sq)) return rounded;
  }
  throw std::runtime_error("rounding acceptance failure");
}

// Server side: decode each residue to its signed representative, invert the
// flattening, rescale by gamma, and drop the padding.
inline std::vector<double> server_postprocess(std::span<const std::uint64_t> y, const Field& field,
                                              const DiscretizationParams& p, const FlattenSpec& spec) {
  if (static_cast<int>(y.size()) < spec.dim_padded) throw std::invalid_argument("need d' reconstructed coordinates");
  std::vector<double> decoded(spec.dim_padded);
  for (int i = 0; i < spec.dim_padded; ++i) decoded[i] = static_cast<double>(field.decode_signed(y[i]));
  auto unflat = unflatten(decoded, spec);
  std::vector<double> out(spec.dim);
  for (int i = 0; i < spec.dim; ++i) out[i] = p.granularity * unflat[i];
  return out;
}

}  // namespace dmm
