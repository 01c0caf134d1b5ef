/*
Copyright 2026 The mframe Authors

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

#include <random>

#include "mframe/bit_io.hpp"
#include "mframe/error.hpp"

using namespace mframe;

TEST_CASE("exp-Golomb codes have the textbook form") {
  BitWriter w;
  w.put_ue(0);  // 1
  w.put_ue(1);  // 010
  w.put_ue(4);  // 00101
  w.align();
  CHECK(w.bit_count() == 16);
  CHECK(w.bytes()[0] == 0b10100010);
  CHECK(w.bytes()[1] == 0b10000000);
  CHECK(ue_length(0) == 1);
  CHECK(ue_length(1) == 3);
  CHECK(ue_length(6) == 5);
  CHECK(ue_length(7) == 7);
  CHECK(se_remap(0) == 0);
  CHECK(se_remap(1) == 1);
  CHECK(se_remap(-1) == 2);
  CHECK(se_remap(2) == 3);
  CHECK(se_length(-1) == 3);
}

TEST_CASE("bit writer and reader round trip mixed fields") {
  std::mt19937_64 rng(7);
  std::vector<std::uint64_t> ue;
  std::vector<std::int64_t> se;
  std::vector<std::pair<std::uint64_t, int>> raw;
  BitWriter w;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t u = rng() >> (2 + rng() % 62);
    const std::int64_t s = static_cast<std::int64_t>(rng() >> 40) - (std::int64_t{1} << 23);
    const int n = static_cast<int>(rng() % 33);
    const std::uint64_t r = n == 0 ? 0 : (rng() & ((std::uint64_t{1} << n) - 1));
    ue.push_back(u);
    se.push_back(s);
    raw.emplace_back(r, n);
    w.put_ue(u);
    w.put_se(s);
    w.put_bits(r, n);
  }
  w.put_double(-1.25e-7);
  w.align();
  const auto bytes = w.take();
  BitReader r(bytes);
  for (std::size_t i = 0; i < ue.size(); ++i) {
    CHECK(r.get_ue() == ue[i]);
    CHECK(r.get_se() == se[i]);
    CHECK(r.get_bits(raw[i].second) == raw[i].first);
  }
  CHECK(r.get_double() == -1.25e-7);
}

TEST_CASE("reader reports overruns as malformed") {
  const std::vector<std::uint8_t> one{0x00};
  BitReader r(one);
  CHECK_THROWS_AS(r.get_ue(), Error);
  const std::vector<std::uint8_t> two{0xFF, 0x01};
  BitReader r2(two);
  CHECK(r2.get_bits(8) == 0xFF);
  CHECK_THROWS_AS(r2.get_bytes(2), Error);
}

TEST_CASE("index bits") {
  CHECK(index_bits(1) == 0);
  CHECK(index_bits(2) == 1);
  CHECK(index_bits(3) == 2);
  CHECK(index_bits(4) == 2);
  CHECK(index_bits(5) == 3);
}
