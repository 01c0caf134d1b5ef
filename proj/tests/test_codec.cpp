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

#include <zlib.h>

#include <random>

#include "mframe/bit_io.hpp"
#include "mframe/codec.hpp"
#include "mframe/error.hpp"
#include "mframe/si_harness.hpp"

using namespace mframe;

namespace {

struct Case {
  Frame target;
  std::vector<Frame> si;
};

Case make_case(std::uint64_t seed, int n_si, int edge = 16, int w = 64, int h = 64,
               DivergenceModel model = DivergenceModel::QuantizedNoise) {
  Case c{synthetic_frame(w, h, seed), {}};
  SiGenConfig g;
  g.seed = seed;
  g.n_si = n_si;
  g.block_edge = edge;
  g.model = model;
  c.si = generate_si_set(c.target, g).frames;
  return c;
}

CodecConfig config(MergeMode mode, int edge = 16) {
  CodecConfig cfg;
  cfg.mode = mode;
  cfg.block_edge = edge;
  return cfg;
}

void reseal(std::vector<std::uint8_t>& bytes) {
  const std::size_t body = bytes.size() - 4;
  const auto crc = static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) bytes[body + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (24 - 8 * i));
}

ErrorKind kind_of(const std::vector<std::uint8_t>& bytes, const Frame& si) {
  try {
    decode_mframe(bytes, si);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("every SI frame decodes to the encoder reconstruction") {
  for (auto mode : {MergeMode::Fixed, MergeMode::Optimized})
    for (int edge : {4, 8, 16})
      for (int n : {1, 2, 3, 4}) {
        const auto c = make_case(static_cast<std::uint64_t>(edge * 10 + n), n, edge, 32, 32, DivergenceModel::Mixed);
        auto cfg = config(mode, edge);
        cfg.scan = n % 2 ? ScanOrder::ZigZag : ScanOrder::Raster;
        const auto r = encode_mframe(c.si, c.target, cfg);
        for (const auto& si : c.si) REQUIRE(decode_mframe(r.bitstream, si) == r.reconstruction);
      }
}

TEST_CASE("fixed mode reproduces target q-coeffs exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = make_case(seed, 3);
    for (bool rd_eob : {false, true}) {
      auto cfg = config(MergeMode::Fixed);
      cfg.rd_eob = rd_eob;
      const auto r = encode_mframe(c.si, c.target, cfg);
      const BlockTransform t(16);
      const double q = qstep_from_qp(cfg.qp_si);
      const auto x0 = analyze_frame(c.target, t, q);
      const auto d = decode_mframe_detailed(r.bitstream, c.si[1]);
      for (std::size_t b = 0; b < x0.size(); ++b)
        for (std::size_t k = 0; k < x0[b].qcoeffs.size(); ++k)
          REQUIRE(d.coefficients[b].coeffs[k] == doctest::Approx(x0[b].qcoeffs[k] * q).epsilon(1e-12));
      for (std::size_t b = 0; b < d.syntax.blocks.size(); ++b)
        if (d.syntax.blocks[b].mode == BlockMode::Merge)
          CHECK(d.syntax.blocks[b].eob == last_nonzero(x0[b].qcoeffs));
    }
  }
}

TEST_CASE("rd_eob has no effect in fixed mode") {
  const auto c = make_case(4, 2);
  auto a = config(MergeMode::Fixed);
  auto b = a;
  b.rd_eob = !a.rd_eob;
  CHECK(encode_mframe(c.si, c.target, a).bitstream == encode_mframe(c.si, c.target, b).bitstream);
}

TEST_CASE("skip blocks") {
  const auto c = make_case(8, 1);
  const std::vector<Frame> same{c.target, c.target, c.target};
  const auto fixed = encode_mframe(same, c.target, config(MergeMode::Fixed));
  CHECK(fixed.report.skip_blocks == 16);
  CHECK(fixed.reconstruction == decode_mframe(fixed.bitstream, c.target));

  const std::vector<Frame> copies{c.si[0], c.si[0]};
  const auto opt = encode_mframe(copies, c.target, config(MergeMode::Optimized));
  CHECK(opt.report.skip_blocks == 16);
  const auto fixed2 = encode_mframe(copies, c.target, config(MergeMode::Fixed));
  CHECK(fixed2.report.skip_blocks < 16);
}

TEST_CASE("encoding is deterministic") {
  const auto c = make_case(12, 3);
  const auto cfg = config(MergeMode::Optimized);
  CHECK(encode_mframe(c.si, c.target, cfg).bitstream == encode_mframe(c.si, c.target, cfg).bitstream);
}

TEST_CASE("report is consistent with the stream and reconstruction") {
  for (auto mode : {MergeMode::Fixed, MergeMode::Optimized}) {
    const auto c = make_case(21, 3);
    const auto cfg = config(mode);
    const auto r = encode_mframe(c.si, c.target, cfg);
    CHECK(r.report.rate_bits == r.bitstream.size() * 8);
    CHECK(r.report.skip_blocks + r.report.intra_blocks + r.report.merge_blocks == 16);
    std::size_t sections = 0;
    for (auto s : r.report.section_bits) sections += s;
    CHECK(sections < r.report.rate_bits);

    const BlockTransform t(16);
    double d = 0.0;
    const auto blocks = partition(c.target, 16);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto y = t.forward(blocks[b]);
      for (std::size_t k = 0; k < y.coeffs.size(); ++k) {
        const double e = y.coeffs[k] - r.coefficients[b].coeffs[k];
        d += e * e;
      }
    }
    CHECK(r.report.distortion == doctest::Approx(d).epsilon(1e-9));
    CHECK(r.report.lagrangian == doctest::Approx(d + r.report.lambda * static_cast<double>(r.report.rate_bits)));
    CHECK(r.report.lambda == lambda_from_qp(cfg.qp_si));
  }
}

TEST_CASE("optimized Lagrangian never exceeds fixed") {
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const auto c = make_case(seed, 1 + static_cast<int>(seed % 4));
    for (double lambda : {1.0, 64.0}) {
      auto f = config(MergeMode::Fixed);
      auto o = config(MergeMode::Optimized);
      f.lambda = o.lambda = lambda;
      CHECK(encode_mframe(c.si, c.target, o).report.lagrangian <=
            encode_mframe(c.si, c.target, f).report.lagrangian + 1e-6);
    }
  }
}

TEST_CASE("syntax survives a write/parse round trip") {
  for (auto mode : {MergeMode::Fixed, MergeMode::Optimized}) {
    const auto c = make_case(40, 3, 8, 32, 32);
    const auto r = encode_mframe(c.si, c.target, config(mode, 8));
    const auto syntax = parse_mframe(r.bitstream);
    CHECK(write_mframe(syntax) == r.bitstream);
    const auto h = read_header(r.bitstream);
    CHECK(h.width == 32);
    CHECK(h.block_edge == 8);
    CHECK(h.si_count == 3);
    CHECK(h.qstep == qstep_from_qp(h.qp_m));
  }
}

TEST_CASE("corruption is reported, never crashes") {
  const auto c = make_case(50, 2);
  const auto r = encode_mframe(c.si, c.target, config(MergeMode::Optimized));
  for (std::size_t pos = 0; pos < r.bitstream.size(); pos += 7) {
    auto bad = r.bitstream;
    bad[pos] ^= 0x10;
    CHECK(kind_of(bad, c.si[0]) == ErrorKind::Checksum);
  }
  std::vector<std::uint8_t> cut(r.bitstream.begin(), r.bitstream.begin() + 3);
  CHECK(kind_of(cut, c.si[0]) == ErrorKind::Malformed);

  // valid checksum over garbage: decode must either succeed or throw a codec error
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    auto bad = r.bitstream;
    for (int k = 0; k < 3; ++k) bad[8 + rng() % (bad.size() - 12)] = static_cast<std::uint8_t>(rng());
    bad.resize(bad.size() - (rng() % 3 == 0 ? rng() % 20 : 0));
    if (bad.size() < 8) continue;
    reseal(bad);
    try {
      decode_mframe(bad, c.si[0]);
    } catch (const Error&) {
    }
  }
  auto wrong_magic = r.bitstream;
  wrong_magic[0] = 'X';
  reseal(wrong_magic);
  CHECK(kind_of(wrong_magic, c.si[0]) == ErrorKind::Malformed);
}

TEST_CASE("dimension and configuration errors") {
  const auto c = make_case(60, 2);
  const auto r = encode_mframe(c.si, c.target, config(MergeMode::Fixed));
  CHECK(kind_of(r.bitstream, Frame(32, 32)) == ErrorKind::Dimension);
  const std::vector<Frame> none;
  CHECK_THROWS_AS(encode_mframe(none, c.target, config(MergeMode::Fixed)), Error);
  const std::vector<Frame> odd{Frame(32, 64)};
  CHECK_THROWS_AS(encode_mframe(odd, c.target, config(MergeMode::Fixed)), Error);
  auto bad = config(MergeMode::Fixed);
  bad.qp_si = 60;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config(MergeMode::Fixed, 12);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("intra block coding round trips and its bit count is exact") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int32_t> q(64, 0);
    const int nz = static_cast<int>(rng() % 64);
    for (int i = 0; i < nz; ++i) q[rng() % 64] = static_cast<std::int32_t>(rng() % 41) - 20;
    BitWriter w;
    encode_intra_block(w, q);
    CHECK(w.bit_count() == intra_block_bits(q));
    w.align();
    const auto bytes = w.take();
    BitReader rd(bytes);
    CHECK(decode_intra_block(rd, 64) == q);
  }
  CHECK(intra_block_bits(std::vector<std::int32_t>(16, 0)) == 1);
}

TEST_CASE("RD EOB placement matches exhaustive search") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    std::vector<double> coded(static_cast<std::size_t>(n)), y0(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      y0[k] = static_cast<double>(static_cast<int>(rng() % 200) - 100) / 10.0;
      coded[k] = static_cast<double>(rng() % 100) / 10.0;
    }
    const double lambda = static_cast<double>(rng() % 50) / 5.0;
    const auto cost_of = [&](int e) {
      double cost = lambda * ue_length(static_cast<std::uint64_t>(e + 1));
      for (int k = 0; k < n; ++k) cost += k <= e ? coded[k] : y0[k] * y0[k];
      return cost;
    };
    double best_cost = 1e300;
    for (int e = -1; e < n; ++e) best_cost = std::min(best_cost, cost_of(e));
    const int chosen = place_eob_rd(coded, y0, lambda);
    CHECK(chosen >= -1);
    CHECK(chosen < n);
    CHECK(cost_of(chosen) == doctest::Approx(best_cost).epsilon(1e-12));
  }
}

TEST_CASE("mode decision") {
  const RdCost intra{10.0, 5.0}, merge{20.0, 2.0};
  CHECK(mode_decide(true, intra, merge, 1.0) == BlockMode::Skip);
  CHECK(mode_decide(false, intra, merge, 1.0) == BlockMode::Intra);
  CHECK(mode_decide(false, intra, merge, 10.0) == BlockMode::Merge);
  CHECK(last_nonzero(std::vector<std::int32_t>{0, 3, 0}) == 1);
  CHECK(last_nonzero(std::vector<std::int32_t>{0, 0}) == -1);
}
