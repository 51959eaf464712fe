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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dmm {

// Concentrated-DP accounting for the aggregate-of-discrete-Gaussians release
// and the parameter planner that picks (gamma, beta, sigma) for a target
// epsilon.  All quantities follow the sum-of-n-clients noise model with
// per-coordinate scale sigma/gamma.

// Divergence correction between a sum of n discrete Gaussians and one
// discrete Gaussian: tau = 10 * sum_{k=1}^{n-1} exp(-2 pi^2 (sigma/gamma)^2 k/(k+1)).
inline double tau(double sigma, double gamma, int n) {
  if (n < 2) return 0.0;
  const double s2 = (sigma / gamma) * (sigma / gamma);
  const double two_pi_sq = 2.0 * M_PI * M_PI;
  double acc = 0.0;
  for (int k = 1; k <= n - 1; ++k) {
    acc += std::exp(-two_pi_sq * s2 * static_cast<double>(k) / static_cast<double>(k + 1));
  }
  return 10.0 * acc;
}

// Effective per-client norm bound after conditional rounding:
// c_hat^2 = min{ c^2 + g^2 d/4 + sqrt(2 ln(1/beta)) * g * (c + g sqrt(d)/2), (c + g sqrt(d))^2 }.
inline double c_hat(double c, double gamma, int d, double beta) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("beta must lie in (0,1)");
  const double root_d = std::sqrt(static_cast<double>(d));
  const double first =
      c * c + gamma * gamma * d / 4.0 + std::sqrt(2.0 * std::log(1.0 / beta)) * gamma * (c + gamma * root_d / 2.0);
  const double second = (c + gamma * root_d) * (c + gamma * root_d);
  return std::sqrt(std::min(first, second));
}

struct AccountantInputs {
  double sensitivity = 1.0;        // Delta = sens^1_Phi(C)
  double clip_norm = 1.0;          // c
  double granularity = 1.0;        // gamma
  double rounding_bias = 0.0625;   // beta
  double sigma = 1.0;              // noise scale (same units as c)
  int n = 2;                       // committee size
  int d = 1;                       // dimension
  double delta = 1e-6;             // approx-DP failure probability
  double dishonest_fraction = 0.0; // mu' in [0, 1/2): corrupted + dropped share

  void validate() const {
    if (sensitivity <= 0 || clip_norm <= 0 || granularity <= 0 || sigma <= 0) {
      throw std::invalid_argument("accountant inputs must be positive");
    }
    if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
    if (dishonest_fraction < 0 || dishonest_fraction >= 0.5) {
      throw std::invalid_argument("dishonest fraction must lie in [0, 1/2)");
    }
  }
};

// The release satisfies (1/2) eps^2 concentrated DP for
// eps = min{ sqrt(Delta^2 c_hat^2 / (n sigma^2) + 2 tau d),
//            Delta c_hat / (sqrt(n) sigma) + tau sqrt(d) },
// scaled by 1/(1 - mu') when a mu' fraction of clients is corrupted or
// dropped (their noise is missing from the aggregate).
inline double epsilon_cdp(const AccountantInputs& in) {
  in.validate();
  const double ch = c_hat(in.clip_norm, in.granularity, in.d, in.rounding_bias);
  const double t = tau(in.sigma, in.granularity, in.n);
  const double main_sq = in.sensitivity * in.sensitivity * ch * ch / (in.n * in.sigma * in.sigma);
  const double first = std::sqrt(main_sq + 2.0 * t * static_cast<double>(in.d));
  const double second = in.sensitivity * ch / (std::sqrt(static_cast<double>(in.n)) * in.sigma) +
                        t * std::sqrt(static_cast<double>(in.d));
  double eps = std::min(first, second);
  if (in.dishonest_fraction > 0) eps /= 1.0 - in.dishonest_fraction;
  return eps;
}

namespace detail {

inline double adp_objective(double eps_cdp, double delta, double alpha) {
  return 0.5 * eps_cdp * eps_cdp * alpha + std::log(1.0 / (alpha * delta)) / (alpha - 1.0) +
         std::log1p(-1.0 / alpha);
}

}  // namespace detail

// Conversion from (1/2) eps^2 concentrated DP to (eps_aDP, delta)-DP:
// inf over alpha > 1 of  eps^2 alpha / 2 + log(1/(alpha delta))/(alpha-1) + log(1 - 1/alpha).
// Minimized by a coarse log-spaced scan plus golden-section refinement; the
// closed-form candidate alpha = 1 + sqrt(2 log(1/delta))/eps guarantees the
// result never exceeds eps (sqrt(2 log(1/delta)) + eps/2).
inline double cdp_to_adp(double eps_cdp, double delta) {
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("delta must lie in (0,1)");
  if (eps_cdp < 0) throw std::invalid_argument("epsilon must be non-negative");

  const double lo = std::log(1.0 + 1e-9);
  const double hi = std::log(1e9);
  const int scan_points = 512;
  double best = detail::adp_objective(eps_cdp, delta, std::exp(hi));
  double best_u = hi;
  for (int i = 0; i <= scan_points; ++i) {
    double u = lo + (hi - lo) * static_cast<double>(i) / scan_points;
    double v = detail::adp_objective(eps_cdp, delta, std::exp(u));
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  if (eps_cdp > 0) {
    double alpha_cf = 1.0 + std::sqrt(2.0 * std::log(1.0 / delta)) / eps_cdp;
    double v = detail::adp_objective(eps_cdp, delta, alpha_cf);
    if (v < best) {
      best = v;
      best_u = std::log(alpha_cf);
    }
  }
  // Golden-section on log(alpha) around the scan winner, tolerance 1e-10.
  double a = std::max(lo, best_u - (hi - lo) / scan_points);
  double b = std::min(hi, best_u + (hi - lo) / scan_points);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = detail::adp_objective(eps_cdp, delta, std::exp(x1));
  double f2 = detail::adp_objective(eps_cdp, delta, std::exp(x2));
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = detail::adp_objective(eps_cdp, delta, std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = detail::adp_objective(eps_cdp, delta, std::exp(x2));
    }
  }
  best = std::min(best, std::min(f1, f2));
  return std::max(best, 0.0);
}

struct PlannedParams {
  double gamma = 0;
  double beta = 0;
  double sigma = 0;
  double eps_check = 0;  // epsilon_cdp at the planned parameters
};

// Picks (gamma, beta, sigma) for a target concentrated-DP epsilon:
//   beta  = min{1/n, 1/2}
//   gamma = sqrt((normA^2 c^2 n T / d + normB^2 c^2 Delta^2 / eps^2) * log(1 + q^2/n)) / q
//   sigma = max{2 c Delta/(eps sqrt(n)), gamma Delta sqrt(8d)/(eps sqrt(n)),
//               (gamma/pi^2) log(80 n d / eps^2)}
// with the free asymptotic constants set to 1.  Self-consistency is enforced
// by re-running epsilon_cdp and doubling sigma on the rare grid corners where
// the constant-1 bound is loose.  normA / normB are max_T ||A_[T,:]||_2 and
// max_T ||B_[T,:]||_2.
inline PlannedParams plan_parameters(int n, int d, int iterations, double clip_norm, double eps_target,
                                     double norm_a, double norm_b, double sensitivity, std::uint64_t modulus) {
  if (n < 2 || d < 1 || iterations < 1) throw std::invalid_argument("bad planner inputs");
  if (eps_target <= 0 || clip_norm <= 0 || sensitivity <= 0) throw std::invalid_argument("bad planner inputs");
  const double q = static_cast<double>(modulus);
  const double log_factor = std::log(1.0 + q * q / static_cast<double>(n));
  const double eps_sq = eps_target * eps_target;

  // Modulus feasibility: accuracy needs q^2 above this bound (constants 1).
  const double log_nd = std::log(static_cast<double>(n) * d / eps_sq);
  const double required_q_sq = static_cast<double>(n) *
                               (norm_a * norm_a * iterations + 1.0 + norm_a * norm_a +
                                norm_b * norm_b *
                                    (static_cast<double>(d) * sensitivity * sensitivity / (eps_sq * n) +
                                     log_nd * log_nd)) *
                               log_factor;
  if (q * q < required_q_sq) {
    int bits = static_cast<int>(std::ceil(std::log2(std::sqrt(required_q_sq))));
    throw std::runtime_error("modulus too small for the requested accuracy: need at least " +
                             std::to_string(bits) + "-bit field");
  }

  PlannedParams out;
  out.beta = std::min(1.0 / static_cast<double>(n), 0.5);
  const double gamma_sq = (norm_a * norm_a * clip_norm * clip_norm * n * iterations / static_cast<double>(d) +
                           norm_b * norm_b * clip_norm * clip_norm * sensitivity * sensitivity / eps_sq) *
                          log_factor / (q * q);
  out.gamma = std::sqrt(gamma_sq);

  const double root_n = std::sqrt(static_cast<double>(n));
  auto sigma_for = [&](double gamma) {
    double s1 = 2.0 * clip_norm * sensitivity / (eps_target * root_n);
    double s2 = gamma * sensitivity * std::sqrt(8.0 * d) / (eps_target * root_n);
    double s3 = gamma / (M_PI * M_PI) * std::log(80.0 * n * static_cast<double>(d) / eps_sq);
    return std::max({s1, s2, s3});
  };
  out.sigma = sigma_for(out.gamma);

  AccountantInputs check;
  check.sensitivity = sensitivity;
  check.clip_norm = clip_norm;
  check.granularity = out.gamma;
  check.rounding_bias = out.beta;
  check.n = n;
  check.d = d;
  check.sigma = out.sigma;
  out.eps_check = epsilon_cdp(check);
  for (int i = 0; i < 64 && out.eps_check > eps_target; ++i) {
    out.sigma *= 2.0;
    check.sigma = out.sigma;
    out.eps_check = epsilon_cdp(check);
  }
  return out;
}

}  // namespace dmm
