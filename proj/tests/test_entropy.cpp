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

#include <cmath>
#include <random>

#include "mframe/entropy.hpp"
#include "mframe/error.hpp"
#include "mframe/range_coder.hpp"
#include "oracles.hpp"

using namespace mframe;

TEST_CASE("probability clamping") {
  CHECK(clamp_prob(0.0) == 1);
  CHECK(clamp_prob(1.0) == 4095);
  CHECK(clamp_prob(0.5) == 2048);
}

TEST_CASE("range coder round trips biased bits near their entropy") {
  for (std::uint32_t p : {1u, 100u, 2048u, 3900u, 4095u}) {
    std::mt19937_64 rng(p);
    std::vector<bool> bits;
    double ideal = 0.0;
    RangeEncoder enc;
    for (int i = 0; i < 20000; ++i) {
      const bool b = (rng() % 4096) >= p;
      bits.push_back(b);
      ideal += -std::log2(b ? (4096.0 - p) / 4096.0 : p / 4096.0);
      enc.encode(b, p);
    }
    const auto bytes = enc.finish();
    CHECK(static_cast<double>(bytes.size() * 8) <= ideal * 1.01 + 64);
    RangeDecoder dec(bytes);
    for (bool b : bits) REQUIRE(dec.decode(p) == b);
    CHECK_FALSE(dec.overrun());
  }
}

TEST_CASE("uniform symbols round trip for small and wide alphabets") {
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> syms;
  RangeEncoder enc;
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t count = 1 + (rng() >> (1 + rng() % 63));
    const std::uint64_t v = rng() % count;
    syms.emplace_back(v, count);
    enc.encode_uniform(v, count);
  }
  const auto bytes = enc.finish();
  RangeDecoder dec(bytes);
  for (const auto& [v, count] : syms) REQUIRE(dec.decode_uniform(count) == v);
  RangeEncoder bad;
  CHECK_THROWS_AS(bad.encode_uniform(5, 5), Error);
}

TEST_CASE("uniform symbols cost log2 of the alphabet") {
  RangeEncoder enc;
  for (int i = 0; i < 4000; ++i) enc.encode_uniform(static_cast<std::uint64_t>(i % 7), 7);
  const auto bytes = enc.finish();
  CHECK(static_cast<double>(bytes.size() * 8) <= 4000 * std::log2(7.0) * 1.01 + 64);
}

TEST_CASE("adaptive contexts learn skewed sources") {
  RangeEncoder enc;
  AdaptiveBit ctx;
  std::mt19937_64 rng(9);
  std::vector<bool> bits;
  for (int i = 0; i < 10000; ++i) {
    bits.push_back(rng() % 20 == 0);
    ctx.encode(enc, bits.back());
  }
  const auto bytes = enc.finish();
  CHECK(bytes.size() * 8 < 10000 * 0.4);
  RangeDecoder dec(bytes);
  AdaptiveBit dctx;
  for (bool b : bits) REQUIRE(dctx.decode(dec) == b);
}

TEST_CASE("shift coding round trips and stays close to the ideal code length") {
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    const auto tc = oracle::entropy_case(seed);
    const auto bytes = entropy_encode_shifts(tc.shifts, tc.dist);
    REQUIRE(entropy_decode_shifts(bytes, tc.dist, tc.shifts.size()) == tc.shifts);
    CHECK(static_cast<double>(bytes.size() * 8) <= ideal_codelength(tc.shifts, tc.dist) * 1.02 + 64);
  }
}

TEST_CASE("ideal code length sums -log2 p") {
  const auto u = ShiftDistribution::uniform(16);
  const std::vector<std::int64_t> s{0, 5, 15};
  CHECK(ideal_codelength(s, u) == doctest::Approx(12.0));
}

TEST_CASE("shift coder rejects contract violations and truncation") {
  const auto u = ShiftDistribution::uniform(8);
  RangeEncoder enc;
  CHECK_THROWS_AS(encode_shift(enc, 8, u), Error);
  CHECK_THROWS_AS(encode_shift(enc, -1, u), Error);
  const ShiftDistribution raw(8, {{2, 0.3}}, 0.7 / 7.0);
  CHECK_THROWS_AS(encode_shift(enc, 2, raw), Error);

  std::vector<std::int64_t> many(400, 3);
  const auto bytes = entropy_encode_shifts(many, u);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 10);
  CHECK_THROWS_AS(entropy_decode_shifts(cut, u, many.size()), Error);
}
