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
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmm/matrix.hpp"

namespace dmm {

// Workloads and factorizations A = B C for the correlated-noise release,
// plus the b-min-sep participation sensitivity of C.

// Prefix-sum workload: A[i][j] = 1 for j <= i.
inline Matrix prefix_workload(int iterations) {
  if (iterations < 1) throw std::invalid_argument("need at least one iteration");
  Matrix a(iterations, iterations);
  for (int i = 0; i < iterations; ++i) {
    for (int j = 0; j <= i; ++j) a.at(i, j) = 1.0;
  }
  return a;
}

// Binary-tree node bookkeeping for the online tree mechanism: which node
// sharings are live at each iteration and which rows of B select them.
struct TreeSchedule {
  int iterations = 0;
  struct Node {
    int first = 0;  // leaf interval [first, last], 1-based
    int last = 0;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> cover;  // cover[T-1] = node ids of the canonical cover of [1,T]
  std::vector<int> exit_iteration;      // first T with node not in cover(T); iterations+1 if live at the end

  int max_live() const {
    std::size_t best = 0;
    for (const auto& c : cover) best = std::max(best, c.size());
    return static_cast<int>(best);
  }
};

enum class FactorMode { Dense, Tree };

struct FactorizationPlan {
  int iterations = 0;  // T*
  int rank = 0;        // rows of C / cols of B
  int min_sep = 1;     // b
  Matrix workload;     // A (prefix)
  Matrix factor_b;     // T* x rank
  Matrix factor_c;     // rank x T*
  FactorMode mode = FactorMode::Dense;
  std::optional<TreeSchedule> tree;
};

// Online binary-tree factorization for T* a power of two: C has one row per
// tree node (the indicator of its leaf interval), and B[T] selects the
// canonical dyadic cover of [1, T], so B C equals the prefix workload exactly
// over the integers and at most ceil(log2 T*) + 1 node sharings are live at
// any iteration.
inline FactorizationPlan honaker_tree(int iterations, int min_sep = 1) {
  if (iterations < 1 || (iterations & (iterations - 1)) != 0) {
    throw std::invalid_argument("tree factorization needs a power-of-two iteration count");
  }
  FactorizationPlan plan;
  plan.iterations = iterations;
  plan.min_sep = min_sep;
  plan.mode = FactorMode::Tree;
  plan.workload = prefix_workload(iterations);

  TreeSchedule sched;
  sched.iterations = iterations;
  for (int size = 1; size <= iterations; size <<= 1) {
    for (int first = 1; first + size - 1 <= iterations; first += size) {
      sched.nodes.push_back({first, first + size - 1});
    }
  }
  const int node_count = static_cast<int>(sched.nodes.size());  // 2 T* - 1

  auto node_id = [&](int first, int size) {
    // Nodes are laid out level by level: sizes 1, 2, 4, ... with
    // iterations/size nodes per level.
    int id = 0;
    for (int s = 1; s < size; s <<= 1) id += iterations / s;
    return id + (first - 1) / size;
  };

  sched.cover.resize(iterations);
  for (int t = 1; t <= iterations; ++t) {
    int pos = 1;
    while (pos <= t) {
      int size = 1;
      while ((pos - 1) % (size << 1) == 0 && pos + (size << 1) - 1 <= t) size <<= 1;
      sched.cover[t - 1].push_back(node_id(pos, size));
      pos += size;
    }
  }
  sched.exit_iteration.assign(node_count, iterations + 1);
  std::vector<char> in_prev(node_count, 0);
  for (int t = 1; t <= iterations; ++t) {
    std::vector<char> in_now(node_count, 0);
    for (int v : sched.cover[t - 1]) in_now[v] = 1;
    for (int v = 0; v < node_count; ++v) {
      if (in_prev[v] && !in_now[v] && sched.exit_iteration[v] > iterations) sched.exit_iteration[v] = t;
    }
    in_prev = in_now;
  }

  plan.rank = node_count;
  plan.factor_c = Matrix(node_count, iterations);
  for (int v = 0; v < node_count; ++v) {
    for (int leaf = sched.nodes[v].first; leaf <= sched.nodes[v].last; ++leaf) plan.factor_c.at(v, leaf - 1) = 1.0;
  }
  plan.factor_b = Matrix(iterations, node_count);
  for (int t = 1; t <= iterations; ++t) {
    for (int v : sched.cover[t - 1]) plan.factor_b.at(t - 1, v) = 1.0;
  }
  plan.tree = std::move(sched);
  return plan;
}

// Trivial factorization B = A, C = I (independent per-iteration noise).
inline FactorizationPlan identity_factorization(int iterations, int min_sep = 1) {
  FactorizationPlan plan;
  plan.iterations = iterations;
  plan.rank = iterations;
  plan.min_sep = min_sep;
  plan.mode = FactorMode::Dense;
  plan.workload = prefix_workload(iterations);
  plan.factor_b = plan.workload;
  plan.factor_c = Matrix(iterations, iterations);
  for (int i = 0; i < iterations; ++i) plan.factor_c.at(i, i) = 1.0;
  return plan;
}

// b-min-sep participation sensitivity of C:
//   Delta^2 = max over patterns phi (gaps >= b) of sum_{i,j in phi} |G_ij|,
// G = C^T C.  Exact for entrywise non-negative grams, an upper bound
// otherwise.  The maximization is exact branch-and-bound: the objective is
// monotone under adding participations, so the value of phi together with
// every remaining position bounds all extensions of phi.
inline double sensitivity(const Matrix& c, int min_sep) {
  if (min_sep < 1) throw std::invalid_argument("min separation must be >= 1");
  const int t = c.cols;
  if (t == 0) return 0.0;
  // G = |C^T C|, accumulated from sparse row outer products (tree and banded
  // factors have short rows).
  std::vector<std::vector<double>> g(t, std::vector<double>(t, 0.0));
  {
    std::vector<int> support;
    for (int r = 0; r < c.rows; ++r) {
      support.clear();
      for (int j = 0; j < t; ++j) {
        if (c.at(r, j) != 0.0) support.push_back(j);
      }
      for (int a : support) {
        double va = c.at(r, a);
        for (int b2 : support) g[a][b2] += va * c.at(r, b2);
      }
    }
    for (auto& row : g) {
      for (auto& v : row) v = std::abs(v);
    }
  }
  // row_suffix[s][u] = sum_{v >= u} G[s][v]; row_max[s][u] = max_{v >= u} G[s][v]
  std::vector<std::vector<double>> row_suffix(t, std::vector<double>(t + 1, 0.0));
  std::vector<std::vector<double>> row_max(t, std::vector<double>(t + 1, 0.0));
  for (int s = 0; s < t; ++s) {
    for (int u = t - 1; u >= 0; --u) {
      row_suffix[s][u] = row_suffix[s][u + 1] + g[s][u];
      row_max[s][u] = std::max(row_max[s][u + 1], g[s][u]);
    }
  }
  // tail_all[u] = objective of the full set {u, ..., t-1}
  std::vector<double> tail_all(t + 1, 0.0);
  for (int u = t - 1; u >= 0; --u) tail_all[u] = tail_all[u + 1] + g[u][u] + 2.0 * row_suffix[u][u + 1];
  // diag_max[u] = max diagonal entry at or after u; pair_max[u] = max G over
  // pairs at or after u that respect the separation.
  std::vector<double> diag_max(t + 1, 0.0), pair_max(t + 1, 0.0);
  for (int u = t - 1; u >= 0; --u) {
    diag_max[u] = std::max(diag_max[u + 1], g[u][u]);
    pair_max[u] = std::max(pair_max[u + 1], u + min_sep < t ? row_max[u][u + min_sep] : 0.0);
  }

  double best = 0.0;
  std::vector<int> phi;
  auto dfs = [&](auto&& self, double val, int next) -> void {
    best = std::max(best, val);
    for (int pos = next; pos < t; ++pos) {
      // Two admissible bounds on any extension whose next element is >= pos,
      // both non-increasing in pos, so the first failure ends the loop:
      // (a) the value of phi plus every remaining position, and (b) a cap on
      // the at most M = 1 + (t-1-pos)/min_sep further elements the
      // separation admits.
      double cross_sum = 0, cross_cap = 0;
      for (int s : phi) {
        cross_sum += row_suffix[s][pos];
        cross_cap += row_max[s][pos];
      }
      double superset = tail_all[pos] + 2.0 * cross_sum;
      double m = static_cast<double>(1 + (t - 1 - pos) / min_sep);
      double capped = m * diag_max[pos] + 2.0 * m * cross_cap + m * (m - 1.0) * pair_max[pos];
      if (val + std::min(superset, capped) <= best) break;
      double gain = g[pos][pos];
      for (int s : phi) gain += 2.0 * g[s][pos];
      phi.push_back(pos);
      self(self, val + gain, pos + min_sep);
      phi.pop_back();
    }
  };
  dfs(dfs, 0.0, 0);
  return std::sqrt(best);
}

// Exact b-min-sep sensitivity for the binary-tree factor, where the gram
// objective collapses to sum over dyadic blocks of count(phi in block)^2.
// Dynamic program over block sizes with a bounded boundary interface: the
// value of c elements inside a block depends only on the block size, the
// forbidden prefix L and required empty suffix R (both capped at the
// separation b).  Branch-and-bound handles the generic gram; this path keeps
// large-T presets with small b tractable.
inline double tree_sensitivity(int leaves, int min_sep) {
  if (leaves < 1 || (leaves & (leaves - 1)) != 0) throw std::invalid_argument("tree sensitivity needs 2^h leaves");
  if (min_sep < 1) throw std::invalid_argument("min separation must be >= 1");
  const double kInf = -1e300;
  const int max_count = 1 + (leaves - 1) / min_sep;

  // table[c][L][R] for the current block size.
  auto table_for_size = [&](int size, const std::vector<std::vector<std::vector<double>>>& half)
      -> std::vector<std::vector<std::vector<double>>> {
    const int cap = std::min(min_sep, size);
    const int half_cap = std::min(min_sep, size / 2);
    const int cmax = std::min(max_count, 1 + (size - 1) / min_sep);
    std::vector<std::vector<std::vector<double>>> table(
        cmax + 1, std::vector<std::vector<double>>(cap + 1, std::vector<double>(cap + 1, kInf)));
    auto half_at = [&](int c, int L, int R) -> double {
      if (c == 0) return 0.0;
      if (L > size / 2 || R > size / 2) return kInf;
      if (c >= static_cast<int>(half.size())) return kInf;
      return half[c][std::min(L, half_cap)][std::min(R, half_cap)];
    };
    for (int c = 0; c <= cmax; ++c) {
      for (int L = 0; L <= cap; ++L) {
        for (int R = 0; R <= cap; ++R) {
          if (c == 0) {
            table[c][L][R] = 0.0;
            continue;
          }
          double best = kInf;
          // all in the left half / all in the right half
          double left_only = half_at(c, L, std::max(R - size / 2, 0));
          double right_only = half_at(c, std::max(L - size / 2, 0), R);
          best = std::max({best, left_only, right_only});
          // split: the last left element sits a slots before the boundary and
          // the first right element o slots after it, so the separation is
          // a + o + 1 and the right part needs a forbidden prefix of
          // max(b - a - 1, 0).
          for (int c1 = 1; c1 < c; ++c1) {
            for (int a = 0; a <= half_cap; ++a) {
              double lv = half_at(c1, L, a);
              if (lv == kInf) continue;
              double rv = half_at(c - c1, std::max(min_sep - a - 1, 0), R);
              if (rv == kInf) continue;
              best = std::max(best, lv + rv);
            }
          }
          if (best != kInf) best += static_cast<double>(c) * c;
          table[c][L][R] = best;
        }
      }
    }
    return table;
  };

  // size 1 base: a single leaf holds at most one element.
  std::vector<std::vector<std::vector<double>>> table(2, std::vector<std::vector<double>>(2, std::vector<double>(2, kInf)));
  for (int L = 0; L <= std::min(min_sep, 1); ++L) {
    for (int R = 0; R <= std::min(min_sep, 1); ++R) {
      table[0][L][R] = 0.0;
      table[1][L][R] = (L == 0 && R == 0) ? 1.0 : kInf;
    }
  }
  for (int size = 2; size <= leaves; size <<= 1) table = table_for_size(size, table);

  double best = 0.0;
  for (std::size_t c = 0; c < table.size(); ++c) best = std::max(best, table[c][0][0]);
  return std::sqrt(best);
}

// Sensitivity routed by plan structure: the tree path for deep-pattern tree
// plans, the generic search otherwise.
inline double plan_sensitivity(const FactorizationPlan& plan) {
  const int max_count = 1 + (plan.iterations - 1) / plan.min_sep;
  if (plan.mode == FactorMode::Tree && max_count > 8) return tree_sensitivity(plan.iterations, plan.min_sep);
  return sensitivity(plan.factor_c, plan.min_sep);
}

// Expected total squared error proxy: sens(C) * ||B||_F^2.  The sensitivity
// enters unsquared; set squared_sensitivity to use Delta^2 instead.
inline double loss(const Matrix& b, const Matrix& c, int min_sep, bool squared_sensitivity = false) {
  if (b.cols != c.rows) throw std::invalid_argument("factor shapes do not conform");
  double delta = sensitivity(c, min_sep);
  if (squared_sensitivity) delta *= delta;
  return delta * b.frobenius_sq();
}

// Factorization file format: a header line "DMMFAC v1 T* r b" followed by
// the T* x r rows of B and then the r x T* rows of C, whitespace-separated
// decimal doubles.  Loading verifies ||prefix - B C||_max <= 1e-9.
inline void save_factorization(const FactorizationPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "DMMFAC v1 " << plan.iterations << " " << plan.rank << " " << plan.min_sep << "\n";
  out.precision(17);
  for (int i = 0; i < plan.iterations; ++i) {
    for (int j = 0; j < plan.rank; ++j) out << plan.factor_b.at(i, j) << (j + 1 == plan.rank ? "" : " ");
    out << "\n";
  }
  for (int i = 0; i < plan.rank; ++i) {
    for (int j = 0; j < plan.iterations; ++j) out << plan.factor_c.at(i, j) << (j + 1 == plan.iterations ? "" : " ");
    out << "\n";
  }
}

inline FactorizationPlan load_factorization(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open factorization file " + path);
  std::string magic, version;
  FactorizationPlan plan;
  in >> magic >> version >> plan.iterations >> plan.rank >> plan.min_sep;
  if (!in || magic != "DMMFAC" || version != "v1") throw std::runtime_error("bad factorization header in " + path);
  if (plan.iterations < 1 || plan.rank < 1 || plan.min_sep < 1) throw std::runtime_error("bad factorization dimensions");
  plan.factor_b = Matrix(plan.iterations, plan.rank);
  for (auto& v : plan.factor_b.data) {
    if (!(in >> v)) throw std::runtime_error("truncated B block in " + path);
  }
  plan.factor_c = Matrix(plan.rank, plan.iterations);
  for (auto& v : plan.factor_c.data) {
    if (!(in >> v)) throw std::runtime_error("truncated C block in " + path);
  }
  plan.workload = prefix_workload(plan.iterations);
  plan.mode = FactorMode::Dense;
  double residual = max_abs_diff(plan.workload, matmul(plan.factor_b, plan.factor_c));
  if (residual > 1e-9) {
    std::ostringstream msg;
    msg << "factorization does not reproduce the prefix workload: max residual " << residual;
    throw std::runtime_error(msg.str());
  }
  return plan;
}

// Named presets matching the two evaluation tasks; tree iteration counts are
// powers of two, the dense variants expect an externally computed file.
struct ScenarioPreset {
  const char* name;
  int iterations;
  int min_sep;
  bool tree;
};

inline const std::vector<ScenarioPreset>& scenario_presets() {
  static const std::vector<ScenarioPreset> presets = {
      {"so-optimal", 2052, 342, false},
      {"so-honaker", 2048, 512, true},
      {"femnist-optimal", 1445, 85, false},
      {"femnist-honaker", 1024, 64, true},
  };
  return presets;
}

}  // namespace dmm
