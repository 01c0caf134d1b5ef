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

#include "mframe/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "mframe/entropy.hpp"
#include "mframe/error.hpp"
#include "mframe/pwc.hpp"
#include "mframe/range_coder.hpp"

namespace mframe {

// ---------------------------------------------------------------------------
// Configuration

double CodecConfig::effective_lambda() const {
  return lambda ? *lambda : lambda_from_qp(qp_si);
}

double CodecConfig::merge_qstep() const {
  return mode == MergeMode::Fixed ? qstep_from_qp(qp_si) : 1.0;
}

int CodecConfig::merge_qp() const {
  // qstep_from_qp(4) == 1
  return mode == MergeMode::Fixed ? qp_si : 4;
}

void CodecConfig::validate() const {
  if (!valid_block_edge(block_edge))
    fail(ErrorKind::Config, "block edge must be 4, 8 or 16");
  if (qp_si < 1 || qp_si > 51) fail(ErrorKind::Config, "qp_si must lie in [1, 51]");
  if (lambda && !(*lambda >= 0.0)) fail(ErrorKind::Config, "lambda must be non-negative");
  if (search.max_spikes < 1 || search.max_spikes > 32)
    fail(ErrorKind::Config, "max_spikes must lie in [1, 32]");
  if (search.patience < 1) fail(ErrorKind::Config, "patience must be >= 1");
}

// ---------------------------------------------------------------------------
// Block-level pieces

int last_nonzero(std::span<const std::int32_t> q) noexcept {
  for (int k = static_cast<int>(q.size()) - 1; k >= 0; --k)
    if (q[k] != 0) return k;
  return -1;
}

int place_eob_rd(std::span<const double> coded_cost, std::span<const double> y0, double lambda) {
  const int limit = static_cast<int>(coded_cost.size());
  double truncated = 0.0;
  for (double y : y0) truncated += y * y;

  // cost(e) = sum_{k<=e} coded + sum_{k>e} y0^2 + lambda * |ue(e + 1)|
  int best_e = -1;
  double best = truncated + lambda * ue_length(0);
  double running = truncated;
  for (int e = 0; e < limit; ++e) {
    running += coded_cost[e] - y0[e] * y0[e];
    const double cost = running + lambda * ue_length(static_cast<std::uint64_t>(e + 1));
    if (cost < best) {
      best = cost;
      best_e = e;
    }
  }
  return best_e;
}

void encode_intra_block(BitWriter& out, std::span<const std::int32_t> q) {
  const int eob = last_nonzero(q);
  out.put_ue(static_cast<std::uint64_t>(eob + 1));
  for (int k = 0; k <= eob; ++k) out.put_se(q[k]);
}

std::vector<std::int32_t> decode_intra_block(BitReader& in, int coeff_count) {
  const auto coded = in.get_ue();
  if (coded > static_cast<std::uint64_t>(coeff_count))
    fail(ErrorKind::Malformed, "intra EOB beyond block size");
  std::vector<std::int32_t> q(static_cast<std::size_t>(coeff_count), 0);
  for (std::uint64_t k = 0; k < coded; ++k) {
    const std::int64_t v = in.get_se();
    if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
      fail(ErrorKind::Malformed, "intra coefficient out of range");
    q[k] = static_cast<std::int32_t>(v);
  }
  return q;
}

std::size_t intra_block_bits(std::span<const std::int32_t> q) {
  const int eob = last_nonzero(q);
  std::size_t bits = static_cast<std::size_t>(ue_length(static_cast<std::uint64_t>(eob + 1)));
  for (int k = 0; k <= eob; ++k) bits += static_cast<std::size_t>(se_length(q[k]));
  return bits;
}

RdCost intra_cost(std::span<const std::int32_t> x0, std::span<const double> y0, double qstep) {
  RdCost cost;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    const double err = y0[k] - HalfValue::of(x0[k]).scaled(qstep);
    cost.distortion += err * err;
  }
  cost.rate = static_cast<double>(intra_block_bits(x0));
  return cost;
}

BlockMode mode_decide(bool skip_allowed, const RdCost& intra, const RdCost& merge, double lambda) {
  if (skip_allowed) return BlockMode::Skip;
  return intra.lagrangian(lambda) < merge.lagrangian(lambda) ? BlockMode::Intra : BlockMode::Merge;
}

// ---------------------------------------------------------------------------
// Reconstruction

std::vector<CoeffBlock> reconstruct_coefficients(const MFrameSyntax& syntax,
                                                 std::span<const QCoeffBlock> si_blocks) {
  const double q = syntax.header.qstep;
  if (si_blocks.size() != syntax.blocks.size())
    fail(ErrorKind::Dimension, "SI frame block count does not match the M-frame");
  std::vector<CoeffBlock> out(syntax.blocks.size());
  for (std::size_t b = 0; b < syntax.blocks.size(); ++b) {
    const auto& decision = syntax.blocks[b];
    const auto& xs = si_blocks[b].qcoeffs;
    auto& coeffs = out[b].coeffs;
    out[b].index = static_cast<int>(b);
    coeffs.assign(xs.size(), 0.0);
    switch (decision.mode) {
      case BlockMode::Skip:
        for (std::size_t k = 0; k < xs.size(); ++k) coeffs[k] = HalfValue::of(xs[k]).scaled(q);
        break;
      case BlockMode::Intra:
        for (std::size_t k = 0; k < xs.size(); ++k)
          coeffs[k] = HalfValue::of(syntax.intra[b][k]).scaled(syntax.header.intra_qstep);
        break;
      case BlockMode::Merge:
        for (int k = 0; k <= decision.eob; ++k) {
          const auto& f = syntax.freqs[static_cast<std::size_t>(k)];
          coeffs[k] = pwc_apply(xs[k], f.step, syntax.shifts[b][k]).scaled(q);
        }
        break;
    }
  }
  return out;
}

namespace {

Frame render(std::span<const CoeffBlock> coeffs, const BlockTransform& transform, int width,
             int height) {
  std::vector<PixelBlock> pixels;
  pixels.reserve(coeffs.size());
  for (const auto& c : coeffs) pixels.push_back(transform.inverse(c));
  return assemble(pixels, width, height);
}

}  // namespace

Frame render_qcoeffs(std::span<const QCoeffBlock> x0, const BlockTransform& transform, int width,
                     int height) {
  std::vector<CoeffBlock> coeffs;
  for (const auto& blk : x0) {
    CoeffBlock c;
    c.index = blk.index;
    for (auto x : blk.qcoeffs) c.coeffs.push_back(HalfValue::of(x).scaled(blk.step));
    coeffs.push_back(std::move(c));
  }
  return render(coeffs, transform, width, height);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_section(BitWriter& out, const std::vector<std::uint8_t>& bytes, std::size_t* size) {
  if (size) *size = bytes.size() * 8;
  out.put_ue(bytes.size());
  out.align();
  out.put_bytes(bytes);
}

std::span<const std::uint8_t> read_section(BitReader& in) {
  const auto len = in.get_ue();
  in.align();
  return in.get_bytes(static_cast<std::size_t>(len));
}

std::uint32_t checksum(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

void write_header(BitWriter& out, const StreamHeader& h) {
  out.put_bits(kStreamMagic, 32);
  out.put_bits(h.version, 8);
  out.put_bits(static_cast<std::uint64_t>(h.width), 16);
  out.put_bits(static_cast<std::uint64_t>(h.height), 16);
  out.put_bits(static_cast<std::uint64_t>(h.block_edge), 8);
  out.put_bit(h.scan == ScanOrder::Raster);
  out.put_bit(h.mode == MergeMode::Optimized);
  out.put_bit(h.fallback);
  out.put_bits(0, 5);
  out.put_bits(static_cast<std::uint64_t>(h.si_count), 8);
  out.put_bits(static_cast<std::uint64_t>(h.qp_m), 8);
  out.put_bits(static_cast<std::uint64_t>(h.qp_intra), 8);
}

StreamHeader read_header_fields(BitReader& in) {
  if (in.get_bits(32) != kStreamMagic) fail(ErrorKind::Malformed, "not an M-frame stream");
  StreamHeader h;
  h.version = static_cast<std::uint8_t>(in.get_bits(8));
  if (h.version != kStreamVersion)
    fail(ErrorKind::Malformed, "unsupported stream version " + std::to_string(h.version));
  h.width = static_cast<int>(in.get_bits(16));
  h.height = static_cast<int>(in.get_bits(16));
  h.block_edge = static_cast<int>(in.get_bits(8));
  h.scan = in.get_bit() ? ScanOrder::Raster : ScanOrder::ZigZag;
  h.mode = in.get_bit() ? MergeMode::Optimized : MergeMode::Fixed;
  h.fallback = in.get_bit();
  in.get_bits(5);
  h.si_count = static_cast<int>(in.get_bits(8));
  h.qp_m = static_cast<int>(in.get_bits(8));
  h.qp_intra = static_cast<int>(in.get_bits(8));
  if (h.qp_m > 51 || h.qp_intra > 51) fail(ErrorKind::Malformed, "QP out of range");
  h.qstep = qstep_from_qp(h.qp_m);
  h.intra_qstep = qstep_from_qp(h.qp_intra);
  if (!valid_block_edge(h.block_edge) || h.width <= 0 || h.height <= 0 ||
      h.width % h.block_edge != 0 || h.height % h.block_edge != 0)
    fail(ErrorKind::Malformed, "inconsistent frame geometry in header");
  if (!(h.qstep > 0.0) || !std::isfinite(h.qstep))
    fail(ErrorKind::Malformed, "invalid quantizer step in header");
  return h;
}

void put_raw(RangeEncoder& enc, std::uint64_t value, int bits) {
  for (int hi = bits; hi > 0; hi -= 16) {
    const int n = std::min(hi, 16);
    enc.encode_uniform((value >> (hi - n)) & ((std::uint64_t{1} << n) - 1), std::uint64_t{1} << n);
  }
}

std::uint64_t get_raw(RangeDecoder& dec, int bits) {
  std::uint64_t v = 0;
  for (int hi = bits; hi > 0; hi -= 16) {
    const int n = std::min(hi, 16);
    v = (v << n) | dec.decode_uniform(std::uint64_t{1} << n);
  }
  return v;
}

// Adaptive contexts of the parameter section. W - 1 is binarized as
// exp-Golomb with a context per prefix position and raw suffix bits.
struct ParamContexts {
  static constexpr int kPrefixContexts = 32;
  AdaptiveBit present, spike;
  AdaptiveBit prefix[kPrefixContexts];

  void put_step(RangeEncoder& enc, std::uint64_t v) {
    const int len = ue_length(v) / 2;
    for (int i = 0; i < len; ++i) prefix[i].encode(enc, true);
    prefix[len].encode(enc, false);
    put_raw(enc, (v + 1) - (std::uint64_t{1} << len), len);
  }

  std::uint64_t get_step(RangeDecoder& dec) {
    int len = 0;
    while (prefix[len].decode(dec)) {
      if (++len >= kPrefixContexts - 1) fail(ErrorKind::Malformed, "step prefix too long");
    }
    return (std::uint64_t{1} << len) - 1 + get_raw(dec, len);
  }
};

void check_crc(std::span<const std::uint8_t> bitstream) {
  if (bitstream.size() < 4) fail(ErrorKind::Malformed, "stream too short");
  const auto body = bitstream.first(bitstream.size() - 4);
  const auto tail = bitstream.last(4);
  const std::uint32_t stored = (std::uint32_t{tail[0]} << 24) | (std::uint32_t{tail[1]} << 16) |
                               (std::uint32_t{tail[2]} << 8) | std::uint32_t{tail[3]};
  if (stored != checksum(body)) fail(ErrorKind::Checksum, "M-frame checksum mismatch");
}

}  // namespace

std::vector<std::uint8_t> write_mframe(const MFrameSyntax& s, std::array<std::size_t, 4>* sections) {
  const auto& h = s.header;
  const int k_count = h.block_edge * h.block_edge;

  BitWriter out;
  write_header(out, h);

  // mode map
  {
    RangeEncoder enc;
    AdaptiveBit coded_ctx, intra_ctx;
    for (const auto& b : s.blocks) {
      coded_ctx.encode(enc, b.mode != BlockMode::Skip);
      if (b.mode != BlockMode::Skip) intra_ctx.encode(enc, b.mode == BlockMode::Intra);
    }
    write_section(out, enc.finish(), sections ? &(*sections)[0] : nullptr);
  }

  // per-frequency parameters
  {
    RangeEncoder enc;
    ParamContexts ctx;
    for (int k = 0; k < k_count; ++k) {
      const auto& f = s.freqs[static_cast<std::size_t>(k)];
      ctx.present.encode(enc, f.present);
      if (!f.present) continue;
      ctx.spike.encode(enc, f.kind == FrequencyKind::Spike);
      ctx.put_step(enc, static_cast<std::uint64_t>(f.step - 1));
      if (f.kind != FrequencyKind::Spike) continue;
      const auto weights = spike_weights_12bit(f.dist);
      put_raw(enc, static_cast<std::uint64_t>(f.dist.spike_count() - 1), 5);
      const int loc_bits = index_bits(static_cast<std::uint64_t>(f.step));
      for (std::size_t i = 0; i < weights.size(); ++i) {
        put_raw(enc, static_cast<std::uint64_t>(f.dist.spikes()[i].location), loc_bits);
        put_raw(enc, weights[i] - 1, kProbBits);
      }
    }
    write_section(out, enc.finish(), sections ? &(*sections)[1] : nullptr);
  }

  // EOBs and intra coefficients
  {
    BitWriter data;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      const auto& d = s.blocks[b];
      if (d.mode == BlockMode::Merge) data.put_ue(static_cast<std::uint64_t>(d.eob + 1));
      if (d.mode == BlockMode::Intra) encode_intra_block(data, s.intra[b]);
    }
    data.align();
    write_section(out, data.bytes(), sections ? &(*sections)[2] : nullptr);
  }

  // shifts
  {
    RangeEncoder enc;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      const auto& d = s.blocks[b];
      if (d.mode != BlockMode::Merge) continue;
      for (int k = 0; k <= d.eob; ++k)
        encode_shift(enc, s.shifts[b][k], s.freqs[static_cast<std::size_t>(k)].dist);
    }
    write_section(out, enc.finish(), sections ? &(*sections)[3] : nullptr);
  }

  auto bytes = out.take();
  const std::uint32_t crc = checksum(bytes);
  for (int shift = 24; shift >= 0; shift -= 8) bytes.push_back(static_cast<std::uint8_t>(crc >> shift));
  return bytes;
}

StreamHeader read_header(std::span<const std::uint8_t> bitstream) {
  check_crc(bitstream);
  BitReader in(bitstream.first(bitstream.size() - 4));
  return read_header_fields(in);
}

MFrameSyntax parse_mframe(std::span<const std::uint8_t> bitstream) {
  check_crc(bitstream);
  BitReader in(bitstream.first(bitstream.size() - 4));
  MFrameSyntax s;
  s.header = read_header_fields(in);
  const auto& h = s.header;
  const int k_count = h.block_edge * h.block_edge;
  const std::size_t block_count =
      static_cast<std::size_t>(h.width / h.block_edge) * static_cast<std::size_t>(h.height / h.block_edge);

  s.blocks.resize(block_count);
  s.shifts.resize(block_count);
  s.intra.resize(block_count);
  s.freqs.resize(static_cast<std::size_t>(k_count));

  {
    RangeDecoder dec(read_section(in));
    AdaptiveBit coded_ctx, intra_ctx;
    for (auto& b : s.blocks) {
      if (!coded_ctx.decode(dec))
        b.mode = BlockMode::Skip;
      else
        b.mode = intra_ctx.decode(dec) ? BlockMode::Intra : BlockMode::Merge;
    }
    if (dec.overrun()) fail(ErrorKind::Malformed, "mode map truncated");
  }

  {
    RangeDecoder dec(read_section(in));
    ParamContexts ctx;
    for (auto& f : s.freqs) {
      f.present = ctx.present.decode(dec);
      if (!f.present) continue;
      const bool spike = ctx.spike.decode(dec);
      f.kind = spike ? FrequencyKind::Spike : FrequencyKind::Uniform;
      const auto w = ctx.get_step(dec);
      if (w >= (std::uint64_t{1} << 31)) fail(ErrorKind::Malformed, "step size out of range");
      f.step = static_cast<std::int64_t>(w) + 1;
      if (!spike) {
        f.dist = ShiftDistribution::uniform(f.step);
        continue;
      }
      const int h_count = static_cast<int>(get_raw(dec, 5)) + 1;
      if (h_count > f.step) fail(ErrorKind::Malformed, "more spikes than shift values");
      const int loc_bits = index_bits(static_cast<std::uint64_t>(f.step));
      std::vector<Spike> spikes;
      std::uint32_t total = 0;
      for (int i = 0; i < h_count; ++i) {
        const auto loc = static_cast<std::int64_t>(get_raw(dec, loc_bits));
        const auto wgt = static_cast<std::uint32_t>(get_raw(dec, kProbBits)) + 1;
        if (loc >= f.step || (!spikes.empty() && loc <= spikes.back().location))
          fail(ErrorKind::Malformed, "spike locations not strictly increasing in [0, W)");
        total += wgt;
        spikes.push_back({loc, static_cast<double>(wgt) / kProbOne});
      }
      const bool all_spikes = h_count == f.step;
      if (all_spikes ? total != kProbOne : total >= kProbOne)
        fail(ErrorKind::Malformed, "spike probabilities do not normalize");
      const double floor_prob =
          all_spikes ? 0.0
                     : static_cast<double>(kProbOne - total) / kProbOne /
                           static_cast<double>(f.step - h_count);
      f.dist = ShiftDistribution(f.step, std::move(spikes), floor_prob);
    }
    if (dec.overrun()) fail(ErrorKind::Malformed, "parameter section truncated");
  }

  {
    BitReader data(read_section(in));
    for (std::size_t b = 0; b < block_count; ++b) {
      auto& d = s.blocks[b];
      if (d.mode == BlockMode::Merge) {
        const auto coded = data.get_ue();
        if (coded > static_cast<std::uint64_t>(k_count))
          fail(ErrorKind::Malformed, "EOB beyond block size");
        d.eob = static_cast<int>(coded) - 1;
      } else if (d.mode == BlockMode::Intra) {
        s.intra[b] = decode_intra_block(data, k_count);
        d.eob = last_nonzero(s.intra[b]);
      }
    }
  }

  {
    RangeDecoder dec(read_section(in));
    for (std::size_t b = 0; b < block_count; ++b) {
      const auto& d = s.blocks[b];
      if (d.mode != BlockMode::Merge) continue;
      auto& shifts = s.shifts[b];
      for (int k = 0; k <= d.eob; ++k) {
        const auto& f = s.freqs[static_cast<std::size_t>(k)];
        if (!f.present) fail(ErrorKind::Malformed, "shift for a frequency without parameters");
        shifts.push_back(decode_shift(dec, f.dist));
      }
    }
    if (dec.overrun()) fail(ErrorKind::Malformed, "shift payload truncated");
  }
  return s;
}

DecodeResult decode_mframe_detailed(std::span<const std::uint8_t> bitstream, const Frame& si) {
  DecodeResult r;
  r.syntax = parse_mframe(bitstream);
  const auto& h = r.syntax.header;
  if (si.width() != h.width || si.height() != h.height)
    fail(ErrorKind::Dimension, "SI frame is " + std::to_string(si.width()) + "x" +
                                   std::to_string(si.height()) + ", stream expects " +
                                   std::to_string(h.width) + "x" + std::to_string(h.height));
  const BlockTransform transform(h.block_edge, h.scan);
  const auto si_blocks = analyze_frame(si, transform, h.qstep);
  r.coefficients = reconstruct_coefficients(r.syntax, si_blocks);
  r.frame = render(r.coefficients, transform, h.width, h.height);
  return r;
}

Frame decode_mframe(std::span<const std::uint8_t> bitstream, const Frame& si) {
  return decode_mframe_detailed(bitstream, si).frame;
}

// ---------------------------------------------------------------------------
// Encoder

namespace {

struct Analysis {
  BlockTransform transform;
  double qstep = 1.0;
  double intra_qstep = 1.0;
  std::vector<CoeffBlock> y0;
  std::vector<QCoeffBlock> x0;
  std::vector<QCoeffBlock> x_intra;            // target at the intra step
  std::vector<std::vector<QCoeffBlock>> si;    // [n][b]
  std::vector<std::vector<MergeStat>> stats;   // [b][k]
  std::vector<bool> si_same;                   // [b]

  std::size_t blocks() const { return x0.size(); }
  int coeffs() const { return transform.size(); }
};

Analysis analyze(std::span<const Frame> si_frames, const Frame& target, const CodecConfig& cfg,
                 double qstep) {
  Analysis a{BlockTransform(cfg.block_edge, cfg.scan), qstep, qstep_from_qp(cfg.qp_si), {}, {}, {}, {}, {}, {}};
  for (const auto& blk : partition(target, cfg.block_edge)) {
    a.y0.push_back(a.transform.forward(blk));
    a.x0.push_back(quantize(a.y0.back(), qstep));
    a.x_intra.push_back(quantize(a.y0.back(), a.intra_qstep));
  }
  for (const auto& f : si_frames) a.si.push_back(analyze_frame(f, a.transform, qstep));

  std::vector<QCoeffBlock> all(si_frames.size() + 1);
  std::vector<QCoeffBlock> si_only(si_frames.size());
  for (std::size_t b = 0; b < a.blocks(); ++b) {
    all[0] = a.x0[b];
    for (std::size_t n = 0; n < si_frames.size(); ++n) all[n + 1] = si_only[n] = a.si[n][b];
    a.stats.push_back(compute_merge_stats(all));
    a.si_same.push_back(si_identical(si_only));
  }
  return a;
}

/// Block layout shared by both constructions.
MFrameSyntax blank_syntax(const Analysis& a, const Frame& target, int si_count, MergeMode mode,
                          int qp_m, int cfg_qp_intra, double lambda) {
  MFrameSyntax s;
  s.header.width = target.width();
  s.header.height = target.height();
  s.header.block_edge = a.transform.edge();
  s.header.scan = a.transform.order();
  s.header.mode = mode;
  s.header.si_count = si_count;
  s.header.qp_m = qp_m;
  s.header.qstep = a.qstep;
  s.header.qp_intra = cfg_qp_intra;
  s.header.intra_qstep = a.intra_qstep;
  s.header.lambda = lambda;
  s.blocks.resize(a.blocks());
  s.shifts.resize(a.blocks());
  s.intra.resize(a.blocks());
  s.freqs.resize(static_cast<std::size_t>(a.coeffs()));
  return s;
}

double truncation_cost(std::span<const double> y0, int from) {
  double d = 0.0;
  for (std::size_t k = static_cast<std::size_t>(from); k < y0.size(); ++k) d += y0[k] * y0[k];
  return d;
}

double exact_distortion(const Analysis& a, std::size_t b, int k) {
  const double err = a.y0[b].coeffs[k] - HalfValue::of(a.x0[b].qcoeffs[k]).scaled(a.qstep);
  return err * err;
}

void set_intra(MFrameSyntax& s, const Analysis& a, std::size_t b) {
  s.blocks[b].mode = BlockMode::Intra;
  s.blocks[b].eob = last_nonzero(a.x_intra[b].qcoeffs);
  s.intra[b] = a.x_intra[b].qcoeffs;
}

// Fixed-target construction: every merged coefficient reproduces the
// target q-coeff exactly, so only the rate differs between modes.
MFrameSyntax construct_fixed(const Analysis& a, const Frame& target, int si_count,
                             const CodecConfig& cfg, double lambda) {
  MFrameSyntax s = blank_syntax(a, target, si_count, MergeMode::Fixed, cfg.qp_si, cfg.qp_si, lambda);
  const int kc = a.coeffs();
  const std::size_t nb = a.blocks();

  std::vector<int> eob(nb, -1);
  std::vector<bool> skip(nb), merge(nb, false);
  std::vector<double> intra_bits(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    skip[b] = a.si_same[b] && a.si[0][b].qcoeffs == a.x0[b].qcoeffs;
    if (skip[b]) continue;
    merge[b] = true;
    eob[b] = last_nonzero(a.x0[b].qcoeffs);
    intra_bits[b] = static_cast<double>(intra_block_bits(a.x0[b].qcoeffs));
  }

  std::vector<std::int64_t> steps(static_cast<std::size_t>(kc), 0);
  std::vector<ShiftDistribution> models(static_cast<std::size_t>(kc));
  auto fit = [&] {
    for (int k = 0; k < kc; ++k) {
      std::int32_t z = -1;
      for (std::size_t b = 0; b < nb; ++b)
        if (merge[b] && k <= eob[b]) z = std::max(z, a.stats[b][k].z_target);
      steps[k] = z < 0 ? 0 : fixed_step(z);
      if (z < 0) continue;
      std::vector<std::int64_t> shifts;
      for (std::size_t b = 0; b < nb; ++b)
        if (merge[b] && k <= eob[b])
          shifts.push_back(floor_mod(fixed_target_shift(a.x0[b].qcoeffs[k], steps[k]), steps[k]));
      models[k] = model_for_shifts(steps[k], shifts);
    }
  };

  fit();
  for (int round = 0; round < 4; ++round) {
    bool changed = false;
    for (std::size_t b = 0; b < nb; ++b) {
      if (skip[b]) continue;
      double merge_bits = ue_length(static_cast<std::uint64_t>(eob[b] + 1));
      for (int k = 0; k <= eob[b]; ++k) {
        // a block outside the current merge set may widen the group step
        const std::int64_t w = std::max<std::int64_t>(steps[k], fixed_step(a.stats[b][k].z_target));
        const auto c = floor_mod(fixed_target_shift(a.x0[b].qcoeffs[k], w), w);
        merge_bits += w == steps[k] ? models[k].bits(c) : std::log2(static_cast<double>(w));
      }
      const bool want_merge = merge_bits <= intra_bits[b];
      if (want_merge != merge[b]) {
        merge[b] = want_merge;
        changed = true;
      }
    }
    if (!changed) break;
    fit();
  }

  for (std::size_t b = 0; b < nb; ++b) {
    if (skip[b]) continue;
    if (!merge[b]) {
      set_intra(s, a, b);
      continue;
    }
    s.blocks[b].mode = BlockMode::Merge;
    s.blocks[b].eob = eob[b];
    for (int k = 0; k <= eob[b]; ++k)
      s.shifts[b].push_back(floor_mod(fixed_target_shift(a.x0[b].qcoeffs[k], steps[k]), steps[k]));
  }
  for (int k = 0; k < kc; ++k) {
    auto& f = s.freqs[static_cast<std::size_t>(k)];
    f.present = steps[k] > 0;
    if (!f.present) continue;
    f.step = steps[k];
    f.dist = models[k];
    f.kind = f.dist.spike_count() > 0 ? FrequencyKind::Spike : FrequencyKind::Uniform;
  }
  return s;
}

struct CellChoice {
  std::int64_t shift = 0;
  double distortion = 0.0;
  double bits = 0.0;
};

struct OptimizedState {
  std::vector<FrequencyParams> freqs;
  std::vector<std::vector<CellChoice>> cells;  // [b][k], valid for k <= eob
  std::vector<int> eob;
  int fallback_frequencies = 0;
};

/// Chooses W(k), the shift distribution and every shift for the merge
/// blocks, then places RD-optimal EOBs. Two passes so the distributions are
/// refit to the blocks that still code each frequency.
OptimizedState optimize_merge(const Analysis& a, const std::vector<bool>& merge,
                              std::vector<int> eob, const CodecConfig& cfg, double lambda) {
  const int kc = a.coeffs();
  const std::size_t nb = a.blocks();
  OptimizedState st;
  st.cells.assign(nb, std::vector<CellChoice>(static_cast<std::size_t>(kc)));

  const int passes = cfg.rd_eob ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    st.freqs.assign(static_cast<std::size_t>(kc), FrequencyParams{});
    st.fallback_frequencies = 0;
    for (int k = 0; k < kc; ++k) {
      std::vector<std::size_t> active;
      std::int32_t z_star = 0, z_target = 0;
      for (std::size_t b = 0; b < nb; ++b) {
        if (!merge[b] || k > eob[b]) continue;
        active.push_back(b);
        z_star = std::max(z_star, a.stats[b][k].z_star);
        z_target = std::max(z_target, a.stats[b][k].z_target);
      }
      if (active.empty()) continue;

      const std::int64_t w = optimized_step(z_star);
      std::vector<ShiftProblem> problems;
      problems.reserve(active.size());
      for (auto b : active) {
        const auto& ms = a.stats[b][k];
        problems.push_back({a.x0[b].qcoeffs[k], a.y0[b].coeffs[k], a.qstep,
                            feasible_shift_range(ms.x_min, ms.x_max, w)});
      }

      // candidate 1: spike + uniform model at W = Z* + 1
      FrequencyParams best;
      best.present = true;
      best.step = w;
      std::vector<CellChoice> best_cells(active.size());
      double best_j;
      if (w == 1) {
        best.kind = FrequencyKind::Uniform;
        best.dist = ShiftDistribution::uniform(1);
        best_j = 0.0;
        for (std::size_t i = 0; i < active.size(); ++i) {
          best_cells[i] = {0, problems[i].distortion(0), 0.0};
          best_j += best_cells[i].distortion;
        }
      } else {
        const auto opt = optimal_distribution(problems, lambda, w, cfg.search);
        best.kind = FrequencyKind::Spike;
        best.dist = opt.distribution;
        best_j = lambda * distribution_side_bits(best.dist);
        for (std::size_t i = 0; i < active.size(); ++i) {
          const auto [c, cost] = select_shift(problems[i], best.dist, lambda);
          best_cells[i] = {c, cost.distortion, cost.rate};
          best_j += cost.lagrangian(lambda);
        }
        // candidate 2: plain uniform at the same W
        double uni_j = 0.0;
        std::vector<CellChoice> uni_cells(active.size());
        const double uni_bits = std::log2(static_cast<double>(w));
        for (std::size_t i = 0; i < active.size(); ++i) {
          const auto c = distortion_min_shift(problems[i]);
          uni_cells[i] = {c, problems[i].distortion(c), uni_bits};
          uni_j += uni_cells[i].distortion + lambda * uni_bits;
        }
        if (uni_j < best_j) {
          best_j = uni_j;
          best.kind = FrequencyKind::Uniform;
          best.dist = ShiftDistribution::uniform(w);
          best_cells = std::move(uni_cells);
        }
      }
      best_j += lambda * ue_length(static_cast<std::uint64_t>(w - 1));

      // candidate 3: fixed-target parameters, exact target q-coeffs
      if (cfg.frequency_fallback) {
        const std::int64_t wf = fixed_step(z_target);
        std::vector<std::int64_t> shifts;
        for (auto b : active) shifts.push_back(floor_mod(fixed_target_shift(a.x0[b].qcoeffs[k], wf), wf));
        const auto model = model_for_shifts(wf, shifts);
        double fix_j = lambda * (ue_length(static_cast<std::uint64_t>(wf - 1)) + distribution_side_bits(model));
        std::vector<CellChoice> fix_cells(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
          fix_cells[i] = {shifts[i], exact_distortion(a, active[i], k), model.bits(shifts[i])};
          fix_j += fix_cells[i].distortion + lambda * fix_cells[i].bits;
        }
        if (fix_j < best_j) {
          best.kind = model.spike_count() > 0 ? FrequencyKind::Spike : FrequencyKind::Uniform;
          best.step = wf;
          best.dist = model;
          best_cells = std::move(fix_cells);
          ++st.fallback_frequencies;
        }
      }

      st.freqs[static_cast<std::size_t>(k)] = best;
      for (std::size_t i = 0; i < active.size(); ++i) st.cells[active[i]][k] = best_cells[i];
    }

    if (!cfg.rd_eob) break;
    for (std::size_t b = 0; b < nb; ++b) {
      if (!merge[b] || eob[b] < 0) continue;
      std::vector<double> coded(static_cast<std::size_t>(eob[b] + 1));
      for (int k = 0; k <= eob[b]; ++k)
        coded[k] = st.cells[b][k].distortion + lambda * st.cells[b][k].bits;
      eob[b] = place_eob_rd(coded, a.y0[b].coeffs, lambda);
    }
  }
  st.eob = std::move(eob);
  return st;
}

double merge_block_lagrangian(const Analysis& a, const OptimizedState& st, std::size_t b,
                              double lambda) {
  const int e = st.eob[b];
  double j = truncation_cost(a.y0[b].coeffs, e + 1) + lambda * ue_length(static_cast<std::uint64_t>(e + 1));
  for (int k = 0; k <= e; ++k) j += st.cells[b][k].distortion + lambda * st.cells[b][k].bits;
  return j;
}

constexpr std::size_t kGroupTrials = 2;

MFrameSyntax construct_optimized(const Analysis& a, const Frame& target, int si_count,
                                 const CodecConfig& cfg, double lambda, int* fallback_freqs) {
  MFrameSyntax s = blank_syntax(a, target, si_count, MergeMode::Optimized, cfg.merge_qp(), cfg.qp_si, lambda);
  const int kc = a.coeffs();
  const std::size_t nb = a.blocks();

  std::vector<bool> merge(nb, false);
  std::vector<int> eob_init(nb, -1);
  std::vector<RdCost> intra(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    s.blocks[b].mode = BlockMode::Skip;
    if (a.si_same[b]) continue;
    merge[b] = true;
    for (int k = kc - 1; k >= 0; --k)
      if (a.stats[b][k].x_min != 0 || a.stats[b][k].x_max != 0) {
        eob_init[b] = cfg.rd_eob ? k : last_nonzero(a.x0[b].qcoeffs);
        break;
      }
    if (!cfg.rd_eob) eob_init[b] = last_nonzero(a.x0[b].qcoeffs);
    intra[b] = intra_cost(a.x_intra[b].qcoeffs, a.y0[b].coeffs, a.intra_qstep);
  }

  // Start with every coded block merged, then move blocks whose realized
  // merge cost exceeds intra and refit the shared parameters.
  OptimizedState st = optimize_merge(a, merge, eob_init, cfg, lambda);
  for (int round = 0; round < 3; ++round) {
    bool switched = false;
    for (std::size_t b = 0; b < nb; ++b) {
      if (!merge[b]) continue;
      if (intra[b].lagrangian(lambda) < merge_block_lagrangian(a, st, b, lambda)) {
        merge[b] = false;
        switched = true;
      }
    }
    if (!switched) break;
    st = optimize_merge(a, merge, eob_init, cfg, lambda);
  }

  // A block sets the group step wherever its spread is the largest, so it
  // can be worth coding intra even when its own merge cost is lower.
  auto frame_cost = [&](const OptimizedState& state, const std::vector<bool>& m) {
    double j = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (a.si_same[b]) continue;
      j += m[b] ? merge_block_lagrangian(a, state, b, lambda) : intra[b].lagrangian(lambda);
    }
    for (const auto& f : state.freqs)
      if (f.present)
        j += lambda * (ue_length(static_cast<std::uint64_t>(f.step - 1)) + distribution_side_bits(f.dist));
    return j;
  };
  std::vector<std::pair<double, std::size_t>> spread;
  for (std::size_t b = 0; b < nb; ++b) {
    if (!merge[b]) continue;
    double z = 0.0;
    for (int k = 0; k <= st.eob[b]; ++k) z += std::log2(1.0 + a.stats[b][k].z_star);
    spread.emplace_back(-z, b);
  }
  std::sort(spread.begin(), spread.end());
  double current = frame_cost(st, merge);
  const std::size_t trials = std::min<std::size_t>(spread.size(), kGroupTrials);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t b = spread[t].second;
    auto trial = merge;
    trial[b] = false;
    OptimizedState alt = optimize_merge(a, trial, eob_init, cfg, lambda);
    const double cost = frame_cost(alt, trial);
    if (cost < current) {
      current = cost;
      merge = std::move(trial);
      st = std::move(alt);
    }
  }

  for (std::size_t b = 0; b < nb; ++b) {
    if (a.si_same[b]) continue;
    if (!merge[b]) {
      set_intra(s, a, b);
      continue;
    }
    s.blocks[b].mode = BlockMode::Merge;
    s.blocks[b].eob = st.eob[b];
    for (int k = 0; k <= st.eob[b]; ++k) s.shifts[b].push_back(st.cells[b][k].shift);
  }
  // drop parameters no block uses any more
  for (int k = 0; k < kc; ++k) {
    bool used = false;
    for (std::size_t b = 0; b < nb && !used; ++b)
      used = s.blocks[b].mode == BlockMode::Merge && k <= s.blocks[b].eob;
    if (!used) st.freqs[static_cast<std::size_t>(k)] = FrequencyParams{};
  }
  s.freqs = std::move(st.freqs);
  if (fallback_freqs) *fallback_freqs = st.fallback_frequencies;
  return s;
}

struct Finished {
  std::vector<std::uint8_t> bytes;
  std::vector<CoeffBlock> coeffs;
  std::array<std::size_t, 4> sections{};
  double distortion = 0.0;
  double lagrangian = 0.0;
};

Finished finish(const MFrameSyntax& s, const Analysis& a, double lambda) {
  Finished f;
  f.bytes = write_mframe(s, &f.sections);
  f.coeffs = reconstruct_coefficients(s, a.si[0]);
  for (std::size_t b = 0; b < f.coeffs.size(); ++b)
    for (std::size_t k = 0; k < f.coeffs[b].coeffs.size(); ++k) {
      const double err = a.y0[b].coeffs[k] - f.coeffs[b].coeffs[k];
      f.distortion += err * err;
    }
  f.lagrangian = f.distortion + lambda * static_cast<double>(f.bytes.size() * 8);
  return f;
}

void fill_stats(EncodeReport& r, const MFrameSyntax& s) {
  r.skip_blocks = r.intra_blocks = r.merge_blocks = 0;
  for (const auto& b : s.blocks) {
    if (b.mode == BlockMode::Skip) ++r.skip_blocks;
    if (b.mode == BlockMode::Intra) ++r.intra_blocks;
    if (b.mode == BlockMode::Merge) ++r.merge_blocks;
  }
  r.frequency_groups = static_cast<int>(
      std::count_if(s.freqs.begin(), s.freqs.end(), [](const FrequencyParams& f) { return f.present; }));
  r.ideal_shift_bits = 0.0;
  RangeEncoder enc;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    if (s.blocks[b].mode != BlockMode::Merge) continue;
    for (int k = 0; k <= s.blocks[b].eob; ++k) {
      const auto& dist = s.freqs[static_cast<std::size_t>(k)].dist;
      r.ideal_shift_bits += dist.bits(s.shifts[b][k]);
      encode_shift(enc, s.shifts[b][k], dist);
    }
  }
  r.shift_payload_bits = enc.finish().size() * 8;
}

}  // namespace

EncodeResult encode_mframe(std::span<const Frame> si_frames, const Frame& target,
                           const CodecConfig& config) {
  config.validate();
  if (si_frames.empty()) fail(ErrorKind::Config, "at least one SI frame is required");
  if (si_frames.size() > 255) fail(ErrorKind::Config, "at most 255 SI frames are supported");
  for (const auto& f : si_frames)
    if (!f.same_shape(target))
      fail(ErrorKind::Dimension, "SI frame " + f.id() + " does not match the target dimensions");
  if (target.width() >= (1 << 16) || target.height() >= (1 << 16))
    fail(ErrorKind::Config, "frame dimensions must be below 65536");

  const double lambda = config.effective_lambda();
  const int n = static_cast<int>(si_frames.size());

  EncodeReport report;
  report.lambda = lambda;

  MFrameSyntax chosen;
  Finished done;
  const Analysis fixed_analysis = [&] {
    CodecConfig fc = config;
    fc.mode = MergeMode::Fixed;
    return analyze(si_frames, target, fc, fc.merge_qstep());
  }();

  if (config.mode == MergeMode::Fixed) {
    chosen = construct_fixed(fixed_analysis, target, n, config, lambda);
    done = finish(chosen, fixed_analysis, lambda);
  } else {
    const Analysis opt_analysis = analyze(si_frames, target, config, config.merge_qstep());
    int fallback_freqs = 0;
    chosen = construct_optimized(opt_analysis, target, n, config, lambda, &fallback_freqs);
    done = finish(chosen, opt_analysis, lambda);
    report.fallback_frequencies = fallback_freqs;
    if (config.frame_fallback) {
      MFrameSyntax alt = construct_fixed(fixed_analysis, target, n, config, lambda);
      alt.header.fallback = true;
      Finished alt_done = finish(alt, fixed_analysis, lambda);
      if (alt_done.lagrangian < done.lagrangian) {
        chosen = std::move(alt);
        done = std::move(alt_done);
        report.frame_fallback = true;
        report.fallback_frequencies = 0;
      }
    }
  }

  report.emitted_mode = chosen.header.mode;
  report.distortion = done.distortion;
  report.rate_bits = done.bytes.size() * 8;
  report.lagrangian = done.lagrangian;
  report.section_bits = done.sections;
  fill_stats(report, chosen);

  EncodeResult result;
  const BlockTransform transform(chosen.header.block_edge, chosen.header.scan);
  result.reconstruction = render(done.coeffs, transform, target.width(), target.height());
  result.coefficients = std::move(done.coeffs);
  result.bitstream = std::move(done.bytes);
  result.report = report;
  return result;
}

}  // namespace mframe
