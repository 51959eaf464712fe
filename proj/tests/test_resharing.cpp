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
#include <map>
#include <set>
#include <vector>

#include "dmm/resharing.hpp"

using dmm::Field;
using dmm::PackedScheme;
using dmm::ReshareBatch;
using dmm::Rng;

namespace {

// Runs one full resharing hop for all parties: committee holds the k input
// sharings (shares[l][i] = party i's share of sharing l); returns the next
// committee's share table recovered[m][j] = party j's share of recovered
// sharing m.  drop is the set of source parties (1-based) that vanish.
std::vector<std::vector<std::uint64_t>> hop(const PackedScheme& scheme,
                                            const std::vector<std::vector<std::uint64_t>>& shares,
                                            const std::set<int>& drop, Rng& rng) {
  const int n = scheme.n();
  const int k = scheme.k();
  // reshared[i][j] = share addressed to next-committee party j from source i.
  std::map<int, std::vector<std::uint64_t>> reshared;
  for (int i = 1; i <= n; ++i) {
    if (drop.count(i)) continue;
    ReshareBatch batch;
    batch.shares.resize(k);
    for (int l = 0; l < k; ++l) batch.shares[l] = shares[l][i - 1];
    reshared[i] = dmm::reshare(scheme, batch, rng);
  }
  std::vector<std::vector<std::uint64_t>> recovered(k, std::vector<std::uint64_t>(n));
  for (int j = 1; j <= n; ++j) {
    std::map<int, std::uint64_t> received;
    for (const auto& [src, vec] : reshared) received[src] = vec[j - 1];
    auto out = dmm::recover(scheme, drop, received);
    for (int m = 0; m < k; ++m) recovered[m][j - 1] = out[m];
  }
  return recovered;
}

std::uint64_t reconstruct_full(const PackedScheme& scheme, const std::vector<std::uint64_t>& shares, int j) {
  std::map<int, std::uint64_t> m;
  for (int i = 1; i <= scheme.n(); ++i) m[i] = shares[i - 1];
  return scheme.reconstruct(m, j);
}

}  // namespace

TEST_CASE("all-zero batch with zero randomness reshapes to zero") {
  PackedScheme scheme(Field(97), 5, 1, 2);
  std::vector<std::uint64_t> zeros{0, 0};
  std::vector<std::uint64_t> no_rand{0};
  auto out = scheme.share_with_randomness(zeros, no_rand);
  for (auto v : out) CHECK(v == 0);
}

TEST_CASE("reshare emits exactly n field elements per batch of k^2 secrets") {
  PackedScheme scheme(Field(4294967291ULL), 8, 2, 2);
  Rng rng(11);
  ReshareBatch batch;
  batch.shares = {1, 2};
  auto msg = dmm::reshare(scheme, batch, rng);
  CHECK(msg.size() == 8);
  ReshareBatch bad;
  bad.shares = {1, 2, 3};
  CHECK_THROWS_AS(dmm::reshare(scheme, bad, rng), std::invalid_argument);
}

TEST_CASE("recover transposes the secret matrix (plaintext oracle, n=6 t_c=1 k=2)") {
  PackedScheme scheme(Field(4294967291ULL), 6, 1, 2);
  Rng rng(2025);
  const int k = 2;
  // secrets[l][m] = m-th packed secret of sharing l.
  std::vector<std::vector<std::uint64_t>> secrets(k);
  std::vector<std::vector<std::uint64_t>> shares(k);
  for (int l = 0; l < k; ++l) {
    secrets[l] = {rng.uniform_field(scheme.field()), rng.uniform_field(scheme.field())};
    shares[l] = scheme.share(secrets[l], rng);
  }
  auto recovered = hop(scheme, shares, {}, rng);
  for (int m = 1; m <= k; ++m) {
    for (int l = 1; l <= k; ++l) {
      CHECK(reconstruct_full(scheme, recovered[m - 1], l) == secrets[l - 1][m - 1]);
    }
  }
}

TEST_CASE("recovery survives the maximum dropout budget") {
  // t_d = n - t_c - k sources may vanish and recovery stays exact.
  PackedScheme scheme(Field(1009), 7, 2, 2);
  Rng rng(31);
  const int k = 2;
  std::vector<std::vector<std::uint64_t>> secrets(k), shares(k);
  for (int l = 0; l < k; ++l) {
    secrets[l] = {rng.uniform_field(scheme.field()), rng.uniform_field(scheme.field())};
    shares[l] = scheme.share(secrets[l], rng);
  }
  std::set<int> drop{2, 5, 7};  // n - t_c - k = 3 dropouts
  auto recovered = hop(scheme, shares, drop, rng);
  for (int m = 1; m <= k; ++m) {
    for (int l = 1; l <= k; ++l) {
      CHECK(reconstruct_full(scheme, recovered[m - 1], l) == secrets[l - 1][m - 1]);
    }
  }
  std::set<int> too_many{1, 2, 3, 5};
  std::map<int, std::uint64_t> received;
  for (int src : {4, 6, 7}) received[src] = 1;
  CHECK_THROWS_WITH(dmm::recover(scheme, too_many, received), "abort: too many dropouts");
}

TEST_CASE("corrupt source shifts recovered secrets by lambda * e, independent of secrets") {
  PackedScheme scheme(Field(1009), 6, 1, 2);
  const Field& f = scheme.field();
  const int k = 2, corrupt = 3;
  std::uint64_t e = 77;

  auto run = [&](std::uint64_t base, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<std::uint64_t>> secrets(k), shares(k);
    for (int l = 0; l < k; ++l) {
      secrets[l] = {f.reduce(base + 10 * l), f.reduce(base + 10 * l + 5)};
      shares[l] = scheme.share(secrets[l], rng);
    }
    // Corrupt source adds e to every coordinate of its reshared sharing,
    // i.e. to its reshare polynomial, shifting each recovered secret by
    // lambda_corrupt^m * e.
    std::map<int, std::vector<std::uint64_t>> reshared;
    for (int i = 1; i <= 6; ++i) {
      ReshareBatch batch;
      batch.shares = {shares[0][i - 1], shares[1][i - 1]};
      auto out = dmm::reshare(scheme, batch, rng);
      if (i == corrupt) {
        for (auto& v : out) v = f.add(v, e);
      }
      reshared[i] = out;
    }
    std::vector<std::vector<std::uint64_t>> recovered(k, std::vector<std::uint64_t>(6));
    for (int j = 1; j <= 6; ++j) {
      std::map<int, std::uint64_t> received;
      for (const auto& [src, vec] : reshared) received[src] = vec[j - 1];
      auto out = dmm::recover(scheme, {}, received);
      for (int m = 0; m < k; ++m) recovered[m][j - 1] = out[m];
    }
    std::vector<std::vector<std::uint64_t>> shift(k, std::vector<std::uint64_t>(k));
    for (int m = 1; m <= k; ++m) {
      for (int l = 1; l <= k; ++l) {
        shift[m - 1][l - 1] = f.sub(reconstruct_full(scheme, recovered[m - 1], l), secrets[l - 1][m - 1]);
      }
    }
    return shift;
  };

  std::vector<int> gamma{1, 2, 3, 4, 5, 6};
  auto shift_a = run(100, 1);
  auto shift_b = run(555, 1);  // same randomness structure, different secrets
  for (int m = 1; m <= k; ++m) {
    std::uint64_t lambda = scheme.recons_coeff(gamma, corrupt, m);
    for (int l = 1; l <= k; ++l) {
      CHECK(shift_a[m - 1][l - 1] == f.mul(lambda, e));
      CHECK(shift_a[m - 1][l - 1] == shift_b[m - 1][l - 1]);
    }
  }
}

TEST_CASE("chained resharing over three committees preserves all secrets") {
  PackedScheme scheme(Field(4294967291ULL), 8, 2, 3);
  Rng rng(404);
  const int k = 3;
  std::vector<std::vector<std::uint64_t>> secrets(k), shares(k);
  for (int l = 0; l < k; ++l) {
    secrets[l].resize(k);
    for (int m = 0; m < k; ++m) secrets[l][m] = rng.uniform_field(scheme.field());
    shares[l] = scheme.share(secrets[l], rng);
  }
  auto hop1 = hop(scheme, shares, {2}, rng);   // orientation flips
  auto hop2 = hop(scheme, hop1, {5, 7}, rng);  // flips back
  for (int l = 1; l <= k; ++l) {
    for (int m = 1; m <= k; ++m) {
      CHECK(reconstruct_full(scheme, hop2[l - 1], m) == secrets[l - 1][m - 1]);
    }
  }
}

TEST_CASE("naive resharing recovers the secret and costs n^2 elements") {
  PackedScheme scheme(Field(1009), 5, 2, 1);
  Rng rng(9);

  SECTION("zero secret with zero randomness stays zero") {
    std::vector<std::uint64_t> z{0};
    std::vector<std::uint64_t> zero_rand{0, 0};
    auto shares = scheme.share_with_randomness(z, zero_rand);
    const Field& f = scheme.field();
    std::vector<int> gamma{1, 2, 3, 4, 5};
    const auto& lambda = scheme.recons_coeffs(gamma, 1);
    std::vector<std::uint64_t> new_shares(5, 0);
    for (int i = 0; i < 5; ++i) {
      std::vector<std::uint64_t> s{shares[i]};
      auto second = scheme.share_with_randomness(s, zero_rand);
      for (int p = 0; p < 5; ++p) new_shares[p] = f.add(new_shares[p], f.mul(lambda[i], second[p]));
    }
    for (auto v : new_shares) CHECK(v == 0);
  }

  SECTION("random secret roundtrip and cost counter") {
    std::vector<std::uint64_t> z{rng.uniform_field(scheme.field())};
    auto shares = scheme.share(z, rng);
    auto result = dmm::naive_reshare(scheme, shares, {}, rng);
    CHECK(result.field_elements_sent == 25);
    CHECK(reconstruct_full(scheme, result.new_shares, 1) == z[0]);
  }

  SECTION("dropouts below threshold abort") {
    std::vector<std::uint64_t> z{5};
    auto shares = scheme.share(z, rng);
    CHECK_THROWS_WITH(dmm::naive_reshare(scheme, shares, {1, 2, 3}, rng), "abort: too many dropouts");
  }
}

TEST_CASE("reshare message wire layout roundtrips") {
  dmm::ReshareMsg m;
  m.source_id = 513;
  m.batch_id = 0xDEADBEEF;
  m.share = 4294967290U;
  auto buf = m.serialize();
  CHECK(buf.size() == 10);
  CHECK(buf[0] == 0x01);  // little-endian 513
  CHECK(buf[1] == 0x02);
  auto back = dmm::ReshareMsg::deserialize(buf);
  CHECK(back.source_id == m.source_id);
  CHECK(back.batch_id == m.batch_id);
  CHECK(back.share == m.share);
}
