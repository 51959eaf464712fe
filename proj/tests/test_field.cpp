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

#include "dmm/field.hpp"
#include "dmm/rng.hpp"

using dmm::Field;

TEST_CASE("modular arithmetic in F_13") {
  Field f(13);
  CHECK(f.add(7, 9) == 3);
  CHECK(f.mul(5, 0) == 0);
  CHECK(f.inv(4) == 10);  // 4 * 10 = 40 = 3*13 + 1
  CHECK(f.mul(4, f.inv(4)) == 1);
  CHECK(f.sub(3, 7) == 9);
  CHECK(f.neg(0) == 0);
}

TEST_CASE("inverse of zero rejected") {
  Field f(13);
  CHECK_THROWS_AS(f.inv(0), std::domain_error);
}

TEST_CASE("field axioms hold exhaustively over F_13") {
  Field f(13);
  for (std::uint64_t a = 0; a < 13; ++a) {
    for (std::uint64_t b = 0; b < 13; ++b) {
      CHECK(f.add(a, b) == f.add(b, a));
      CHECK(f.mul(a, b) == f.mul(b, a));
      for (std::uint64_t c = 0; c < 13; ++c) {
        CHECK(f.add(f.add(a, b), c) == f.add(a, f.add(b, c)));
        CHECK(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)));
        CHECK(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)));
      }
    }
    if (a != 0) CHECK(f.mul(a, f.inv(a)) == 1);
  }
}

TEST_CASE("signed encoding in F_11") {
  Field f(11);
  CHECK(f.decode_signed(10) == -1);
  CHECK(f.decode_signed(5) == 5);
  CHECK(f.encode_signed(-5) == 6);
  CHECK_THROWS_AS(f.encode_signed(6), std::out_of_range);
  CHECK_THROWS_AS(f.encode_signed(-6), std::out_of_range);
}

TEST_CASE("signed encode/decode roundtrip both ways") {
  Field f(11);
  for (std::int64_t x = -5; x <= 5; ++x) CHECK(f.decode_signed(f.encode_signed(x)) == x);
  for (std::uint64_t v = 0; v < 11; ++v) CHECK(f.encode_signed(f.decode_signed(v)) == v);

  Field big;  // default modulus
  dmm::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    std::int64_t half = static_cast<std::int64_t>((big.modulus() - 1) / 2);
    std::int64_t x = static_cast<std::int64_t>(rng.uniform_below(2 * half + 1)) - half;
    CHECK(big.decode_signed(big.encode_signed(x)) == x);
  }
}

TEST_CASE("default modulus is the largest prime below 2^32") {
  Field f;
  CHECK(f.modulus() == 4294967291ULL);
  CHECK(f.bit_width() == 32);
}

TEST_CASE("non-prime moduli rejected") {
  CHECK_THROWS_AS(Field(12), std::invalid_argument);
  CHECK_THROWS_AS(Field(4294967295ULL), std::invalid_argument);  // 2^32 - 1 composite
  CHECK_NOTHROW(Field(13));
  CHECK_NOTHROW(Field(2147483647ULL));  // 2^31 - 1
}
