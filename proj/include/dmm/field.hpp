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
#include <stdexcept>
#include <string>

namespace dmm {

namespace detail {

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<__uint128_t>(a) * b) % m);
}

inline std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e > 0) {
    if (e & 1) r = mulmod_u64(r, a, m);
    a = mulmod_u64(a, a, m);
    e >>= 1;
  }
  return r;
}

// Deterministic Miller-Rabin over the full 64-bit range.
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 0; i < s - 1; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

}  // namespace detail

// Prime field Z_q with a signed-representative encoding.  The modulus is a
// runtime parameter so that tiny fields (q = 13) can be exercised alongside
// the default 32-bit field.  Residues are plain uint64_t values in [0, q);
// all operations keep intermediates within 64 bits since q < 2^32.
class Field {
 public:
  // Largest prime below 2^32.
  static constexpr std::uint64_t kDefaultModulus = 4294967291ULL;

  explicit Field(std::uint64_t modulus = kDefaultModulus) : q_(modulus) {
    if (modulus < 3 || modulus > 0xFFFFFFFFULL) {
      throw std::invalid_argument("field modulus must be an odd prime below 2^32");
    }
    if (!detail::is_prime_u64(modulus)) {
      throw std::invalid_argument("field modulus " + std::to_string(modulus) + " is not prime");
    }
    bit_width_ = 0;
    for (std::uint64_t v = q_ - 1; v > 0; v >>= 1) ++bit_width_;
  }

  std::uint64_t modulus() const { return q_; }
  int bit_width() const { return bit_width_; }  // ceil(log2 q)

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    std::uint64_t s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + q_ - b; }
  std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : q_ - a; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return (a * b) % q_; }

  std::uint64_t pow(std::uint64_t a, std::uint64_t e) const { return detail::powmod_u64(a, e, q_); }

  std::uint64_t inv(std::uint64_t a) const {
    if (a == 0) throw std::domain_error("field inverse of zero");
    // Extended Euclid; q is prime so gcd(a, q) = 1.
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(q_), new_r = static_cast<std::int64_t>(a);
    while (new_r != 0) {
      std::int64_t quo = r / new_r;
      std::int64_t tmp = t - quo * new_t;
      t = new_t;
      new_t = tmp;
      tmp = r - quo * new_r;
      r = new_r;
      new_r = tmp;
    }
    if (t < 0) t += static_cast<std::int64_t>(q_);
    return static_cast<std::uint64_t>(t);
  }

  std::uint64_t reduce(std::uint64_t v) const { return v % q_; }

  // Maps x in [-(q-1)/2, (q-1)/2] to its residue.
  std::uint64_t encode_signed(std::int64_t x) const {
    std::int64_t half = static_cast<std::int64_t>((q_ - 1) / 2);
    if (x > half || x < -half) {
      throw std::out_of_range("signed value " + std::to_string(x) + " exceeds field half-range");
    }
    return x >= 0 ? static_cast<std::uint64_t>(x) : q_ - static_cast<std::uint64_t>(-x);
  }

  // Inverse of encode_signed: v if v <= q/2, else v - q.
  std::int64_t decode_signed(std::uint64_t v) const {
    if (v >= q_) throw std::out_of_range("residue out of range");
    std::uint64_t half = (q_ - 1) / 2;
    if (v <= half) return static_cast<std::int64_t>(v);
    return static_cast<std::int64_t>(v) - static_cast<std::int64_t>(q_);
  }

  bool operator==(const Field& o) const { return q_ == o.q_; }

 private:
  std::uint64_t q_;
  int bit_width_;
};

}  // namespace dmm
