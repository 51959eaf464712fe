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

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "dmm/packed_sharing.hpp"

namespace dmm {

// Linear secret resharing across committees.  A committee holds k packed
// sharings (k^2 secrets); each party reshares its k-vector of shares as one
// fresh packed sharing (n field elements), and the next committee recovers
// packed sharings of the transposed secret matrix: after one hop, recovered
// sharing m packs (z_{1,m}, ..., z_{k,m}).

// Party i's shares of the k sharings being reshared to the next committee.
struct ReshareBatch {
  std::vector<std::uint64_t> shares;  // length exactly k
  int source_committee = 0;
  int target_committee = 0;
};

// Reshare: one fresh packed sharing of the party's k-share vector, addressed
// to the n parties of the next committee.  Exactly n field elements.
inline std::vector<std::uint64_t> reshare(const PackedScheme& scheme, const ReshareBatch& batch, Rng& rng) {
  if (static_cast<int>(batch.shares.size()) != scheme.k()) {
    throw std::invalid_argument("reshare batch must hold exactly k shares");
  }
  return scheme.share(batch.shares, rng);
}

// Recover: party j of the next committee combines the reshared shares it
// received from the surviving sources.  received maps source index (1-based)
// to the j-th share of that source's reshared sharing; it must cover exactly
// [n] \ drop.  Output m (1-based) is party j's share of the sharing packing
// the m-th slot of every original sharing.
inline std::vector<std::uint64_t> recover(const PackedScheme& scheme, const std::set<int>& drop,
                                          const std::map<int, std::uint64_t>& received) {
  for (const auto& [src, val] : received) {
    (void)val;
    if (drop.count(src)) throw std::invalid_argument("received reshare from a dropped source");
  }
  std::vector<int> gamma;
  gamma.reserve(received.size());
  for (int src = 1; src <= scheme.n(); ++src) {
    if (drop.count(src)) continue;
    if (!received.count(src)) throw std::invalid_argument("missing reshare from non-dropped source");
    gamma.push_back(src);
  }
  if (static_cast<int>(gamma.size()) < scheme.recons_threshold()) {
    throw std::runtime_error("abort: too many dropouts");
  }
  std::vector<std::uint64_t> out(scheme.k());
  const Field& f = scheme.field();
  for (int m = 1; m <= scheme.k(); ++m) {
    const auto& coeffs = scheme.recons_coeffs(gamma, m);
    std::uint64_t acc = 0;
    for (std::size_t idx = 0; idx < gamma.size(); ++idx) {
      acc = f.add(acc, f.mul(coeffs[idx], received.at(gamma[idx])));
    }
    out[m - 1] = acc;
  }
  return out;
}

// Naive n^2-overhead resharing of a single non-packed secret (k must be 1):
// every surviving source distributes a sharing of its share, and the next
// committee folds them with the public reconstruction coefficients.
struct NaiveReshareResult {
  std::vector<std::uint64_t> new_shares;   // per next-committee party, 0-based
  std::uint64_t field_elements_sent = 0;   // n shares from each surviving source
};

inline NaiveReshareResult naive_reshare(const PackedScheme& scheme, std::span<const std::uint64_t> shares_of_z,
                                        const std::set<int>& drop, Rng& rng) {
  if (scheme.k() != 1) throw std::invalid_argument("naive resharing is defined for non-packed sharings (k=1)");
  if (static_cast<int>(shares_of_z.size()) != scheme.n()) throw std::invalid_argument("need one share per party");
  std::vector<int> gamma;
  for (int i = 1; i <= scheme.n(); ++i) {
    if (!drop.count(i)) gamma.push_back(i);
  }
  if (static_cast<int>(gamma.size()) < scheme.recons_threshold()) {
    throw std::runtime_error("abort: too many dropouts");
  }
  const Field& f = scheme.field();
  const auto& lambda = scheme.recons_coeffs(gamma, 1);
  NaiveReshareResult out;
  out.new_shares.assign(scheme.n(), 0);
  for (std::size_t idx = 0; idx < gamma.size(); ++idx) {
    std::vector<std::uint64_t> secret{shares_of_z[gamma[idx] - 1]};
    auto second_level = scheme.share(secret, rng);
    out.field_elements_sent += static_cast<std::uint64_t>(scheme.n());
    for (int p = 0; p < scheme.n(); ++p) {
      out.new_shares[p] = f.add(out.new_shares[p], f.mul(lambda[idx], second_level[p]));
    }
  }
  return out;
}

// Wire layout of one reshare message.  The simulator's byte ledger counts the
// 4-byte share payloads only (header bytes are envelope overhead and are not
// part of the per-secret communication accounting).
struct ReshareMsg {
  std::uint16_t source_id = 0;
  std::uint32_t batch_id = 0;
  std::uint32_t share = 0;

  static constexpr std::size_t kWireSize = 10;
  static constexpr std::size_t kPayloadSize = 4;

  std::array<std::uint8_t, kWireSize> serialize() const {
    std::array<std::uint8_t, kWireSize> buf{};
    buf[0] = static_cast<std::uint8_t>(source_id & 0xFF);
    buf[1] = static_cast<std::uint8_t>(source_id >> 8);
    for (int i = 0; i < 4; ++i) buf[2 + i] = static_cast<std::uint8_t>((batch_id >> (8 * i)) & 0xFF);
    for (int i = 0; i < 4; ++i) buf[6 + i] = static_cast<std::uint8_t>((share >> (8 * i)) & 0xFF);
    return buf;
  }

  static ReshareMsg deserialize(std::span<const std::uint8_t> buf) {
    if (buf.size() != kWireSize) throw std::invalid_argument("reshare message must be 10 bytes");
    ReshareMsg m;
    m.source_id = static_cast<std::uint16_t>(buf[0] | (static_cast<std::uint16_t>(buf[1]) << 8));
    for (int i = 0; i < 4; ++i) m.batch_id |= static_cast<std::uint32_t>(buf[2 + i]) << (8 * i);
    for (int i = 0; i < 4; ++i) m.share |= static_cast<std::uint32_t>(buf[6 + i]) << (8 * i);
    return m;
  }
};

}  // namespace dmm
