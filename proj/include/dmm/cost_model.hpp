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
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmm {

// Analytic per-client communication for the resharing layer, evaluated at the
// worst iteration.  The model uses the real-valued packing parameter
// k = 2 mu n (the simulator rounds k down to an integer; the agreement
// tolerance absorbs the gap).  Decimal units: 1 MB = 1e6 bytes.

enum class Mechanism { Honaker, OptimalDense };
enum class ReshareTarget { Lrp, Naive };

struct CostScenario {
  std::string name;
  std::int64_t dim = 0;   // model dimension d
  int iterations = 0;     // T*
  int n = 64;             // committee size
  double mu = 1.0 / 6.0;  // corruption slack: t_c + t_d < (1/2 - mu) n
  int field_bits = 32;
  Mechanism mechanism = Mechanism::Honaker;
};

// Reshared vector count at the worst iteration: ceil(log2 T*) live tree
// nodes for the online tree, T* - 1 noise vectors at the penultimate
// iteration for a dense factorization.
inline double worst_iteration_vectors(const CostScenario& s) {
  if (s.iterations <= 1) return 0.0;
  if (s.mechanism == Mechanism::Honaker) return std::ceil(std::log2(static_cast<double>(s.iterations)));
  return static_cast<double>(s.iterations - 1);
}

// LRP moves one packed sharing of n elements per k shares, i.e. 1/(4 mu^2)
// field elements per secret across the committee and 1/(4 mu^2 n) per client.
inline double lrp_bytes_per_client(const CostScenario& s) {
  double per_secret_per_client = 1.0 / (4.0 * s.mu * s.mu * s.n);
  return static_cast<double>(s.dim) * worst_iteration_vectors(s) * per_secret_per_client * (s.field_bits / 8.0);
}

// Naive resharing distributes a full n-party sharing of every share: n field
// elements per secret per client.
inline double naive_bytes_per_client(const CostScenario& s) {
  return static_cast<double>(s.dim) * worst_iteration_vectors(s) * static_cast<double>(s.n) * (s.field_bits / 8.0);
}

// Fresh sharing traffic (noise plus gradients, one packed sharing of n
// elements per k secrets each) and output shares to the server.  The
// headline resharing figure excludes these; both are reported.
inline double fresh_bytes_per_client(const CostScenario& s) {
  double per_secret = 1.0 / (2.0 * s.mu);  // n/k field elements per secret
  return 2.0 * static_cast<double>(s.dim) * per_secret * (s.field_bits / 8.0);
}

inline double output_bytes_per_client(const CostScenario& s) {
  double k = 2.0 * s.mu * s.n;
  return static_cast<double>(s.dim) / k * (s.field_bits / 8.0);
}

inline double all_inclusive_bytes_per_client(const CostScenario& s) {
  return lrp_bytes_per_client(s) + fresh_bytes_per_client(s) + output_bytes_per_client(s);
}

// naive / lrp = 4 mu^2 n^2 regardless of scenario.
inline double naive_to_lrp_ratio(const CostScenario& s) { return 4.0 * s.mu * s.mu * s.n * s.n; }

struct CostRow {
  CostScenario scenario;
  double lrp_bytes;
  double naive_bytes;
  double all_inclusive_bytes;
  double secagg_reference_bytes;  // external baseline, echoed not computed
};

// Secure-aggregation baseline communication per client (external reference
// constants for the two tasks).
inline double secagg_reference_bytes(const std::string& task) {
  if (task == "so") return 16.2e6;
  if (task == "femnist") return 4.07e6;
  throw std::invalid_argument("unknown task: " + task);
}

inline CostScenario preset_scenario(const std::string& task, Mechanism mech) {
  CostScenario s;
  s.n = 64;
  s.mu = 1.0 / 6.0;
  s.field_bits = 32;
  s.mechanism = mech;
  if (task == "so") {
    s.dim = 4050748;
    s.iterations = (mech == Mechanism::Honaker) ? 2048 : 2052;
    s.name = (mech == Mechanism::Honaker) ? "so-honaker" : "so-optimal";
  } else if (task == "femnist") {
    s.dim = 1018174;
    s.iterations = (mech == Mechanism::Honaker) ? 1024 : 1445;
    s.name = (mech == Mechanism::Honaker) ? "femnist-honaker" : "femnist-optimal";
  } else {
    throw std::invalid_argument("unknown task: " + task);
  }
  return s;
}

inline CostRow preset_costs(const std::string& task, Mechanism mech) {
  CostRow row;
  row.scenario = preset_scenario(task, mech);
  row.lrp_bytes = lrp_bytes_per_client(row.scenario);
  row.naive_bytes = naive_bytes_per_client(row.scenario);
  row.all_inclusive_bytes = all_inclusive_bytes_per_client(row.scenario);
  row.secagg_reference_bytes = secagg_reference_bytes(task);
  return row;
}

inline std::string format_bytes(double bytes) {
  std::ostringstream out;
  out.precision(3);
  if (bytes >= 1e12) {
    out << bytes / 1e12 << " TB";
  } else if (bytes >= 1e9) {
    out << bytes / 1e9 << " GB";
  } else if (bytes >= 1e6) {
    out << bytes / 1e6 << " MB";
  } else if (bytes >= 1e3) {
    out << bytes / 1e3 << " KB";
  } else {
    out << bytes << " B";
  }
  return out.str();
}

}  // namespace dmm
