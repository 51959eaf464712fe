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
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dmm/field.hpp"
#include "dmm/rng.hpp"

namespace dmm {

// Lagrange coefficients evaluating the interpolant through points xs at
// `target`: out[i] = prod_{j != i} (target - xs[j]) / (xs[i] - xs[j]).
inline std::vector<std::uint64_t> lagrange_coeffs(const Field& f,
                                                  std::span<const std::uint64_t> xs,
                                                  std::uint64_t target) {
  const std::size_t m = xs.size();
  std::vector<std::uint64_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::uint64_t num = 1, den = 1;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      num = f.mul(num, f.sub(target, xs[j]));
      den = f.mul(den, f.sub(xs[i], xs[j]));
    }
    out[i] = f.mul(num, f.inv(den));
  }
  return out;
}

// Packed Shamir sharing of a k-vector of secrets under a degree-(t_c + k - 1)
// polynomial.  Share points default to 1..n, secret points to -1..-k (i.e.
// q-1..q-k).  A subset of t_c shares reveals nothing; any t_c + k shares
// reconstruct every packed secret through public Lagrange coefficients.
class PackedScheme {
 public:
  PackedScheme(Field field, int n, int t_c, int k)
      : field_(field), n_(n), t_c_(t_c), k_(k) {
    if (n < 1 || k < 1 || t_c < 0) throw std::invalid_argument("bad sharing parameters");
    if (t_c + k > n) throw std::invalid_argument("degree t_c + k - 1 must be below n");
    if (static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(k) >= field_.modulus()) {
      throw std::invalid_argument("field too small: need n + k < q");
    }
    share_points_.resize(n_);
    for (int i = 0; i < n_; ++i) share_points_[i] = static_cast<std::uint64_t>(i + 1);
    secret_points_.resize(k_);
    for (int j = 0; j < k_; ++j) secret_points_[j] = field_.modulus() - 1 - static_cast<std::uint64_t>(j);
    build_share_matrix();
  }

  const Field& field() const { return field_; }
  int n() const { return n_; }
  int t_c() const { return t_c_; }
  int k() const { return k_; }
  int degree() const { return t_c_ + k_ - 1; }
  int recons_threshold() const { return t_c_ + k_; }
  std::uint64_t share_point(int i) const { return share_points_[i - 1]; }    // i in 1..n
  std::uint64_t secret_point(int j) const { return secret_points_[j - 1]; }  // j in 1..k

  // Shares the k secrets with the t_c free values drawn uniformly.
  std::vector<std::uint64_t> share(std::span<const std::uint64_t> secrets, Rng& rng) const {
    std::vector<std::uint64_t> randoms(t_c_);
    for (int i = 0; i < t_c_; ++i) randoms[i] = rng.uniform_field(field_);
    return share_with_randomness(secrets, randoms);
  }

  // Deterministic variant used by enumeration tests: the polynomial is the
  // unique degree-(t_c+k-1) interpolant through (secret_point(j), secrets[j])
  // and (share_point(i), randoms[i]) for i in 1..t_c.
  std::vector<std::uint64_t> share_with_randomness(std::span<const std::uint64_t> secrets,
                                                   std::span<const std::uint64_t> randoms) const {
    if (static_cast<int>(secrets.size()) != k_) throw std::invalid_argument("secret vector must have length k");
    if (static_cast<int>(randoms.size()) != t_c_) throw std::invalid_argument("need exactly t_c random values");
    std::vector<std::uint64_t> vals(k_ + t_c_);
    for (int j = 0; j < k_; ++j) vals[j] = field_.reduce(secrets[j]);
    for (int i = 0; i < t_c_; ++i) vals[k_ + i] = field_.reduce(randoms[i]);
    std::vector<std::uint64_t> shares(n_);
    for (int i = 0; i < n_; ++i) {
      std::uint64_t acc = 0;
      const std::uint64_t* row = &share_matrix_[static_cast<std::size_t>(i) * (k_ + t_c_)];
      for (int j = 0; j < k_ + t_c_; ++j) acc = field_.add(acc, field_.mul(row[j], vals[j]));
      shares[i] = acc;
    }
    return shares;
  }

  // Lagrange coefficients lambda_i^j for a reconstruction set Gamma (sorted
  // 1-based share indices) evaluated at secret point j.  Cached per (Gamma, j)
  // since Recover reuses one Gamma across k^2 secrets.
  const std::vector<std::uint64_t>& recons_coeffs(const std::vector<int>& gamma, int j) const {
    if (static_cast<int>(gamma.size()) < recons_threshold()) {
      throw std::runtime_error("insufficient shares: need at least t_c + k");
    }
    if (j < 1 || j > k_) throw std::invalid_argument("secret index out of range");
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto key = std::make_pair(gamma, j);
    auto it = coeff_cache_.find(key);
    if (it != coeff_cache_.end()) return it->second;
    std::vector<std::uint64_t> xs(gamma.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      if (gamma[i] < 1 || gamma[i] > n_) throw std::invalid_argument("share index out of range");
      xs[i] = share_points_[gamma[i] - 1];
    }
    auto coeffs = lagrange_coeffs(field_, xs, secret_points_[j - 1]);
    auto [ins, ok] = coeff_cache_.emplace(std::move(key), std::move(coeffs));
    (void)ok;
    return ins->second;
  }

  std::uint64_t recons_coeff(const std::vector<int>& gamma, int i, int j) const {
    const auto& coeffs = recons_coeffs(gamma, j);
    for (std::size_t idx = 0; idx < gamma.size(); ++idx) {
      if (gamma[idx] == i) return coeffs[idx];
    }
    throw std::invalid_argument("index not in reconstruction set");
  }

  // Reconstructs secret j from the provided shares (index -> value map).
  std::uint64_t reconstruct(const std::map<int, std::uint64_t>& shares, int j) const {
    std::vector<int> gamma;
    gamma.reserve(shares.size());
    for (const auto& [idx, val] : shares) gamma.push_back(idx);
    const auto& coeffs = recons_coeffs(gamma, j);
    std::uint64_t acc = 0;
    std::size_t pos = 0;
    for (const auto& [idx, val] : shares) {
      acc = field_.add(acc, field_.mul(coeffs[pos], field_.reduce(val)));
      ++pos;
    }
    return acc;
  }

 private:
  void build_share_matrix() {
    // shares = M * [secrets || randoms]; M row i holds the Lagrange basis of
    // the points (secret_points, share_points[0..t_c)) evaluated at
    // share_points[i].  Rows for the first t_c share points are unit rows, so
    // those shares equal the random values directly.
    std::vector<std::uint64_t> basis_points;
    basis_points.reserve(k_ + t_c_);
    for (auto p : secret_points_) basis_points.push_back(p);
    for (int i = 0; i < t_c_; ++i) basis_points.push_back(share_points_[i]);
    share_matrix_.resize(static_cast<std::size_t>(n_) * (k_ + t_c_));
    for (int i = 0; i < n_; ++i) {
      auto row = lagrange_coeffs(field_, basis_points, share_points_[i]);
      for (int j = 0; j < k_ + t_c_; ++j) share_matrix_[static_cast<std::size_t>(i) * (k_ + t_c_) + j] = row[j];
    }
  }

  Field field_;
  int n_, t_c_, k_;
  std::vector<std::uint64_t> share_points_;
  std::vector<std::uint64_t> secret_points_;
  std::vector<std::uint64_t> share_matrix_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::vector<int>, int>, std::vector<std::uint64_t>> coeff_cache_;
};

}  // namespace dmm
