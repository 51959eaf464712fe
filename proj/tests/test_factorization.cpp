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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "dmm/factorization.hpp"
#include "dmm/rng.hpp"

using dmm::FactorizationPlan;
using dmm::Matrix;

namespace {

// Exhaustive oracle: max over all b-min-sep participation patterns of
// sum_{i,j in phi} |G_ij| via bitmask enumeration (T <= ~20).
double sensitivity_oracle(const Matrix& c, int min_sep) {
  const int t = c.cols;
  std::vector<std::vector<double>> g(t, std::vector<double>(t));
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < t; ++j) {
      double dot = 0;
      for (int r = 0; r < c.rows; ++r) dot += c.at(r, i) * c.at(r, j);
      g[i][j] = std::abs(dot);
    }
  }
  double best = 0;
  for (std::uint32_t mask = 0; mask < (1u << t); ++mask) {
    int prev = -min_sep;
    bool ok = true;
    for (int i = 0; i < t && ok; ++i) {
      if (mask & (1u << i)) {
        if (i - prev < min_sep) ok = false;
        prev = i;
      }
    }
    if (!ok) continue;
    double val = 0;
    for (int i = 0; i < t; ++i) {
      if (!(mask & (1u << i))) continue;
      for (int j = 0; j < t; ++j) {
        if (mask & (1u << j)) val += g[i][j];
      }
    }
    best = std::max(best, val);
  }
  return std::sqrt(best);
}

}  // namespace

TEST_CASE("prefix workload") {
  CHECK(dmm::prefix_workload(1).at(0, 0) == 1.0);
  auto a = dmm::prefix_workload(3);
  std::vector<std::vector<double>> expected{{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(a.at(i, j) == expected[i][j]);
  }
  auto big = dmm::prefix_workload(7);
  for (int i = 0; i < 7; ++i) {
    double row_sum = 0;
    for (int j = 0; j < 7; ++j) row_sum += big.at(i, j);
    CHECK(row_sum == i + 1.0);
  }
  CHECK_THROWS_AS(dmm::prefix_workload(0), std::invalid_argument);
}

TEST_CASE("tree factorization") {
  SECTION("T*=1 degenerates to scalars") {
    auto plan = dmm::honaker_tree(1);
    CHECK(plan.rank == 1);
    CHECK(plan.factor_b.at(0, 0) == 1.0);
    CHECK(plan.factor_c.at(0, 0) == 1.0);
  }

  SECTION("T*=4 row for T=3 covers {1,2} and {3}") {
    auto plan = dmm::honaker_tree(4);
    auto bc = dmm::matmul(plan.factor_b, plan.factor_c);
    CHECK(bc.at(2, 0) == 1.0);
    CHECK(bc.at(2, 1) == 1.0);
    CHECK(bc.at(2, 2) == 1.0);
    CHECK(bc.at(2, 3) == 0.0);
    // Exactly two nodes selected at T=3: the pair node and a leaf.
    REQUIRE(plan.tree.has_value());
    CHECK(plan.tree->cover[2].size() == 2);
    const auto& n0 = plan.tree->nodes[plan.tree->cover[2][0]];
    const auto& n1 = plan.tree->nodes[plan.tree->cover[2][1]];
    CHECK(n0.first == 1);
    CHECK(n0.last == 2);
    CHECK(n1.first == 3);
    CHECK(n1.last == 3);
  }

  SECTION("B C equals the prefix workload exactly in integer arithmetic") {
    for (int t : {1, 2, 4, 8, 16, 64, 256, 1024}) {
      auto plan = dmm::honaker_tree(t);
      // Integer matmul, no floating point.
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
          long long acc = 0;
          for (int v = 0; v < plan.rank; ++v) {
            acc += static_cast<long long>(plan.factor_b.at(i, v)) * static_cast<long long>(plan.factor_c.at(v, j));
          }
          CHECK(acc == (j <= i ? 1 : 0));
        }
      }
    }
  }

  SECTION("live set never exceeds ceil(log2 T*) + 1") {
    for (int t : {2, 8, 64, 1024}) {
      auto plan = dmm::honaker_tree(t);
      int limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(t)))) + 1;
      CHECK(plan.tree->max_live() <= limit);
    }
  }

  SECTION("non-power-of-two rejected") { CHECK_THROWS_AS(dmm::honaker_tree(12), std::invalid_argument); }
}

TEST_CASE("factorization file roundtrip and validation") {
  SECTION("B=A, C=I is a valid plan") {
    auto plan = dmm::identity_factorization(6);
    dmm::save_factorization(plan, "fac_identity.txt");
    auto loaded = dmm::load_factorization("fac_identity.txt");
    CHECK(loaded.iterations == 6);
    CHECK(dmm::sensitivity(loaded.factor_c, 6) == Catch::Approx(1.0));
    std::remove("fac_identity.txt");
  }

  SECTION("tree plan roundtrips exactly") {
    auto plan = dmm::honaker_tree(8, 2);
    dmm::save_factorization(plan, "fac_tree.txt");
    auto loaded = dmm::load_factorization("fac_tree.txt");
    CHECK(loaded.iterations == plan.iterations);
    CHECK(loaded.rank == plan.rank);
    CHECK(loaded.min_sep == plan.min_sep);
    CHECK(dmm::max_abs_diff(loaded.factor_b, plan.factor_b) == 0.0);
    CHECK(dmm::max_abs_diff(loaded.factor_c, plan.factor_c) == 0.0);
    std::remove("fac_tree.txt");
  }

  SECTION("B C != A rejected with residual report") {
    FactorizationPlan bad = dmm::identity_factorization(4);
    bad.factor_b.at(2, 2) = 0.5;
    dmm::save_factorization(bad, "fac_bad.txt");
    CHECK_THROWS_WITH(dmm::load_factorization("fac_bad.txt"), Catch::Matchers::ContainsSubstring("residual"));
    std::remove("fac_bad.txt");
  }
}

TEST_CASE("sensitivity") {
  SECTION("identity C: sqrt of max pattern size; single participation at b=T*") {
    auto plan = dmm::identity_factorization(8);
    CHECK(dmm::sensitivity(plan.factor_c, 8) == Catch::Approx(1.0));
    CHECK(dmm::sensitivity(plan.factor_c, 3) == Catch::Approx(std::sqrt(3.0)));  // {1,4,7}
    CHECK(dmm::sensitivity(plan.factor_c, 1) == Catch::Approx(std::sqrt(8.0)));
  }

  SECTION("prefix C at T*=4, b=2 yields sqrt(10)") {
    auto c = dmm::prefix_workload(4);
    CHECK(dmm::sensitivity(c, 2) == Catch::Approx(std::sqrt(10.0)));
  }

  SECTION("homogeneity: sensitivity(2C) = 2 sensitivity(C)") {
    auto c = dmm::prefix_workload(5);
    Matrix scaled = c;
    for (auto& v : scaled.data) v *= 2.0;
    CHECK(dmm::sensitivity(scaled, 2) == Catch::Approx(2.0 * dmm::sensitivity(c, 2)));
  }

  SECTION("matches exhaustive enumeration on prefix, tree, and random matrices") {
    dmm::Rng rng(2718);
    for (int t = 1; t <= 12; ++t) {
      for (int b = 1; b <= t; ++b) {
        auto prefix = dmm::prefix_workload(t);
        CHECK(dmm::sensitivity(prefix, b) == Catch::Approx(sensitivity_oracle(prefix, b)).margin(1e-9));
      }
    }
    for (int t : {1, 2, 4, 8}) {
      for (int b = 1; b <= t; ++b) {
        auto tree = dmm::honaker_tree(t);
        CHECK(dmm::sensitivity(tree.factor_c, b) ==
              Catch::Approx(sensitivity_oracle(tree.factor_c, b)).margin(1e-9));
      }
    }
    for (int trial = 0; trial < 20; ++trial) {
      int t = 4 + static_cast<int>(rng.uniform_below(9));  // 4..12
      int r = 2 + static_cast<int>(rng.uniform_below(6));
      Matrix c(r, t);
      for (auto& v : c.data) v = rng.next_unit();
      int b = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(t)));
      CHECK(dmm::sensitivity(c, b) == Catch::Approx(sensitivity_oracle(c, b)).margin(1e-9));
    }
  }
}

TEST_CASE("loss") {
  SECTION("B = I, C = A at b = T*") {
    int t = 5;
    auto a = dmm::prefix_workload(t);
    Matrix eye(t, t);
    for (int i = 0; i < t; ++i) eye.at(i, i) = 1.0;
    CHECK(dmm::loss(eye, a, t) == Catch::Approx(dmm::sensitivity(a, t) * t));
  }

  SECTION("cubic scaling under (B, C) -> (sB, sC)") {
    auto plan = dmm::honaker_tree(4, 2);
    double base = dmm::loss(plan.factor_b, plan.factor_c, 2);
    Matrix sb = plan.factor_b, sc = plan.factor_c;
    for (auto& v : sb.data) v *= 3.0;
    for (auto& v : sc.data) v *= 3.0;
    CHECK(dmm::loss(sb, sc, 2) == Catch::Approx(27.0 * base));
  }

  SECTION("tree loss against dense evaluation, with and without squaring") {
    auto plan = dmm::honaker_tree(4, 1);
    double delta = dmm::sensitivity(plan.factor_c, 1);
    double fro = plan.factor_b.frobenius_sq();
    CHECK(dmm::loss(plan.factor_b, plan.factor_c, 1) == Catch::Approx(delta * fro));
    CHECK(dmm::loss(plan.factor_b, plan.factor_c, 1, true) == Catch::Approx(delta * delta * fro));
  }
}

TEST_CASE("tree-specialized sensitivity matches the generic search") {
  for (int t : {1, 2, 4, 8, 16, 32}) {
    auto plan = dmm::honaker_tree(t);
    for (int b = 1; b <= t; ++b) {
      CHECK(dmm::tree_sensitivity(t, b) == Catch::Approx(dmm::sensitivity(plan.factor_c, b)).margin(1e-9));
    }
  }
  // Routed entry point agrees with both paths.
  auto plan = dmm::honaker_tree(64, 4);  // max pattern size 16 -> tree path
  CHECK(dmm::plan_sensitivity(plan) == Catch::Approx(dmm::sensitivity(plan.factor_c, 4)).margin(1e-9));
}

TEST_CASE("scenario presets") {
  const auto& presets = dmm::scenario_presets();
  REQUIRE(presets.size() == 4);
  CHECK(presets[0].iterations == 2052);
  CHECK(presets[0].min_sep == 342);
  CHECK(presets[1].iterations == 2048);
  CHECK(presets[1].min_sep == 512);
  CHECK(presets[2].iterations == 1445);
  CHECK(presets[2].min_sep == 85);
  CHECK(presets[3].iterations == 1024);
  CHECK(presets[3].min_sep == 64);
}
