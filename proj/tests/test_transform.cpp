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
#include <numbers>
#include <random>

#include "mframe/error.hpp"
#include "mframe/transform.hpp"

using namespace mframe;

namespace {

// Direct evaluation of the orthonormal 2D DCT-II at (u, v).
double naive_dct(const std::vector<double>& s, int n, int u, int v) {
  const auto alpha = [n](int k) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); };
  double acc = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      acc += s[static_cast<std::size_t>(y * n + x)] * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * n)) *
             std::cos(std::numbers::pi * (2 * y + 1) * v / (2.0 * n));
  return alpha(u) * alpha(v) * acc;
}

PixelBlock random_block(int edge, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PixelBlock b{edge, 0, {}};
  for (int i = 0; i < edge * edge; ++i) b.samples.push_back(static_cast<double>(rng() % 256));
  return b;
}

}  // namespace

TEST_CASE("zig-zag table for 4x4 matches the conventional order") {
  const std::vector<int> expected{0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15};
  CHECK(scan_table(4, ScanOrder::ZigZag) == expected);
  std::vector<int> raster(16);
  for (int i = 0; i < 16; ++i) raster[static_cast<std::size_t>(i)] = i;
  CHECK(scan_table(4, ScanOrder::Raster) == raster);
}

TEST_CASE("scan tables are permutations") {
  for (int edge : {4, 8, 16}) {
    auto t = scan_table(edge, ScanOrder::ZigZag);
    std::sort(t.begin(), t.end());
    for (int i = 0; i < edge * edge; ++i) CHECK(t[static_cast<std::size_t>(i)] == i);
  }
}

TEST_CASE("forward transform matches direct DCT-II evaluation") {
  for (int edge : {4, 8, 16}) {
    const BlockTransform t(edge);
    const auto block = random_block(edge, static_cast<std::uint64_t>(edge));
    const auto coeffs = t.forward(block);
    for (int i = 0; i < t.size(); ++i) {
      const int pos = t.scan()[static_cast<std::size_t>(i)];
      const double want = naive_dct(block.samples, edge, pos % edge, pos / edge);
      CHECK(coeffs.coeffs[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("transform is orthonormal: inverse recovers samples and energy is preserved") {
  for (int edge : {4, 8, 16})
    for (auto order : {ScanOrder::ZigZag, ScanOrder::Raster}) {
      const BlockTransform t(edge, order);
      const auto block = random_block(edge, 99u + static_cast<std::uint64_t>(edge));
      const auto c = t.forward(block);
      const auto back = t.inverse(c);
      double e_pix = 0.0, e_coef = 0.0;
      for (std::size_t i = 0; i < block.samples.size(); ++i) {
        CHECK(back.samples[i] == doctest::Approx(block.samples[i]).epsilon(1e-9));
        e_pix += block.samples[i] * block.samples[i];
        e_coef += c.coeffs[i] * c.coeffs[i];
      }
      CHECK(e_coef == doctest::Approx(e_pix).epsilon(1e-12));
    }
}

TEST_CASE("DC of a flat block is edge times the sample value") {
  const BlockTransform t(8);
  PixelBlock b{8, 0, std::vector<double>(64, 100.0)};
  const auto c = t.forward(b);
  CHECK(c.coeffs[0] == doctest::Approx(800.0));
  for (std::size_t i = 1; i < c.coeffs.size(); ++i) CHECK(std::abs(c.coeffs[i]) < 1e-9);
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_half_away(0.5) == 1);
  CHECK(round_half_away(-0.5) == -1);
  CHECK(round_half_away(1.5) == 2);
  CHECK(round_half_away(2.5) == 3);
  CHECK(round_half_away(-2.5) == -3);
  CHECK(round_half_away(0.49) == 0);
  CHECK(round_half_away(-0.49) == 0);
}

TEST_CASE("quantization rounds Y/Q and dequantization scales back") {
  CoeffBlock c{3, {10.0, -7.5, 2.4, -2.6, 0.0}};
  const auto q = quantize(c, 5.0);
  CHECK(q.index == 3);
  CHECK(q.qcoeffs == std::vector<std::int32_t>{2, -2, 0, -1, 0});
  const auto d = dequantize(q);
  CHECK(d.coeffs == std::vector<double>{10.0, -10.0, 0.0, -5.0, 0.0});
  CHECK_THROWS_AS(quantize(c, 0.0), Error);
}

TEST_CASE("quantizer step doubles every six QP") {
  CHECK(qstep_from_qp(4) == 1.0);
  CHECK(qstep_from_qp(10) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(qstep_from_qp(28) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(qstep_from_qp(30) == doctest::Approx(std::pow(2.0, 26.0 / 6.0)));
}

TEST_CASE("partition and assemble round trip a frame") {
  Frame f(32, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x) f.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) & 0xFF);
  for (int edge : {4, 8, 16}) {
    const auto blocks = partition(f, edge);
    CHECK(blocks.size() == static_cast<std::size_t>((32 / edge) * (16 / edge)));
    CHECK(blocks[1].samples[0] == f.at(edge, 0));
    CHECK(assemble(blocks, 32, 16) == f);
  }
}

TEST_CASE("frame geometry and block edge are validated") {
  CHECK(valid_block_edge(4));
  CHECK(valid_block_edge(16));
  CHECK_FALSE(valid_block_edge(32));
  CHECK_THROWS_AS(BlockTransform(5), Error);
  CHECK_THROWS_AS(partition(Frame(20, 16), 16), Error);
}

TEST_CASE("assemble rounds and clips samples") {
  PixelBlock b{4, 0, std::vector<double>(16, 0.0)};
  b.samples[0] = -3.0;
  b.samples[1] = 300.0;
  b.samples[2] = 10.5;
  b.samples[3] = 10.49;
  const std::vector<PixelBlock> blocks{b};
  const Frame f = assemble(blocks, 4, 4);
  CHECK(f.at(0, 0) == 0);
  CHECK(f.at(1, 0) == 255);
  CHECK(f.at(2, 0) == 11);
  CHECK(f.at(3, 0) == 10);
}
