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
#include <vector>

#include "dmm/factorization.hpp"
#include "dmm/matrix.hpp"

namespace dmm {

// Lifecycle of shared vectors driven by an integer coefficient matrix with
// one row per iteration and one column per vector: a vector is created by the
// committee of its first use, combined into the release whenever its
// coefficient is nonzero, and reshared forward until its last use.  In the
// prefix-release (optimized) mode the noise coefficients are the row
// differences of B, so fully-compensated tree nodes drop out of the
// resharing set.

struct VectorUse {
  int id = 0;
  long long coeff = 0;
};

class VectorSchedule {
 public:
  // coeffs: iterations x vector_count, entries must be integral.
  static VectorSchedule from_coefficients(const Matrix& coeffs) {
    VectorSchedule s;
    s.iterations_ = coeffs.rows;
    s.vectors_ = coeffs.cols;
    s.creation_.assign(coeffs.cols, 0);
    s.last_use_.assign(coeffs.cols, 0);
    s.entering_.assign(coeffs.rows + 1, {});
    s.uses_.assign(coeffs.rows + 1, {});
    s.reshare_.assign(coeffs.rows + 1, {});
    for (int v = 0; v < coeffs.cols; ++v) {
      int first = 0, last = 0;
      for (int t = 1; t <= coeffs.rows; ++t) {
        double raw = coeffs.at(t - 1, v);
        long long c = std::llround(raw);
        if (std::abs(raw - static_cast<double>(c)) > 1e-9) {
          throw std::invalid_argument("protocol coefficients must be integers (dense real factorizations feed the accountant and cost model only)");
        }
        if (c == 0) continue;
        if (first == 0) first = t;
        last = t;
        s.uses_[t].push_back({v, c});
      }
      s.creation_[v] = first;
      s.last_use_[v] = last;
      if (first > 0) s.entering_[first].push_back(v);
    }
    for (int t = 1; t <= coeffs.rows; ++t) {
      for (int v = 0; v < coeffs.cols; ++v) {
        if (s.creation_[v] > 0 && s.creation_[v] <= t && s.last_use_[v] > t) s.reshare_[t].push_back(v);
      }
    }
    return s;
  }

  // Noise schedule from a factorization: coefficients are B (full protocol)
  // or the row differences of B (prefix-release optimization).
  static VectorSchedule noise_schedule(const FactorizationPlan& plan, bool optimized) {
    if (!optimized) return from_coefficients(plan.factor_b);
    Matrix diff(plan.factor_b.rows, plan.factor_b.cols);
    for (int t = 0; t < plan.factor_b.rows; ++t) {
      for (int v = 0; v < plan.factor_b.cols; ++v) {
        diff.at(t, v) = plan.factor_b.at(t, v) - (t > 0 ? plan.factor_b.at(t - 1, v) : 0.0);
      }
    }
    return from_coefficients(diff);
  }

  // Gradient schedule: the workload row in the full protocol, the identity
  // (each iteration releases only its own aggregate) under the prefix
  // optimization.
  static VectorSchedule gradient_schedule(const FactorizationPlan& plan, bool optimized) {
    if (!optimized) return from_coefficients(plan.workload);
    Matrix eye(plan.iterations, plan.iterations);
    for (int i = 0; i < plan.iterations; ++i) eye.at(i, i) = 1.0;
    return from_coefficients(eye);
  }

  int iterations() const { return iterations_; }
  int vector_count() const { return vectors_; }
  const std::vector<int>& entering(int t) const { return entering_[t]; }
  const std::vector<VectorUse>& uses(int t) const { return uses_[t]; }
  const std::vector<int>& reshare_set(int t) const { return reshare_[t]; }
  int creation_iteration(int v) const { return creation_[v]; }

  // Orientation of the vector's stored sharings at iteration t: every
  // committee hop transposes the k x k batch layout.
  bool flipped(int v, int t) const { return ((t - creation_[v]) & 1) != 0; }

 private:
  int iterations_ = 0;
  int vectors_ = 0;
  std::vector<int> creation_, last_use_;
  std::vector<std::vector<int>> entering_, reshare_;
  std::vector<std::vector<VectorUse>> uses_;
};

}  // namespace dmm
