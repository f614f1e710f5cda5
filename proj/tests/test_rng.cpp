/*
   Copyright 2026 The hts Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <doctest.h>

#include <cmath>
#include <vector>

#include "hts/rng.hpp"

using namespace hts;

TEST_CASE("philox known answers") {
  // published Random123 test vectors
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("sequential reads match random access blocks") {
  PhiloxStream s(42, 7);
  for (std::uint64_t b = 0; b < 40; ++b) {
    const PhiloxCounter blk = s.block_at(b);
    for (int w = 0; w < 4; ++w) CHECK(s.next_u32() == blk[w]);
  }
  PhiloxStream t(42, 7);
  CHECK(t.block_at(1000) == s.block_at(1000));
  CHECK(PhiloxStream(42, 8).block_at(0) != s.block_at(0));
  CHECK(PhiloxStream(43, 7).block_at(0) != s.block_at(0));
}

TEST_CASE("uniforms lie in the open unit interval") {
  CHECK(u32_to_open01(0) > 0.0);
  CHECK(u32_to_open01(0xffffffffu) < 1.0);
  PhiloxStream s(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int j = 0; j < n; ++j) sum += s.next_uniform();
  CHECK(std::abs(sum / n - 0.5) < 3 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("ziggurat normal moments and tails") {
  PhiloxStream s(2024, 3);
  const int n = 1000000;
  double m1 = 0, m2 = 0, m4 = 0;
  int tail = 0;
  for (int j = 0; j < n; ++j) {
    const double z = s.next_normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
    tail += std::abs(z) > 3.0;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 3 * std::sqrt(1.0 / n));
  CHECK(std::abs(m2 - 1) < 3 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3) < 3 * std::sqrt(96.0 / n));
  const double p = std::erfc(3.0 / std::sqrt(2.0));
  CHECK(std::abs(tail - n * p) < 4 * std::sqrt(n * p));
}

TEST_CASE("box muller") {
  const auto z = box_muller(std::exp(-0.5), 0.0);
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == doctest::Approx(0.0));
}

TEST_CASE("mix64 separates inputs") {
  CHECK(mix64(1, 2) != mix64(2, 1));
  CHECK(mix64(0, 0) != mix64(0, 1));
  CHECK(mix64(5, 6) == mix64(5, 6));
}
