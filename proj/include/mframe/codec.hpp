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

#ifndef MFRAME_CODEC_HPP
#define MFRAME_CODEC_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mframe/bit_io.hpp"
#include "mframe/frame.hpp"
#include "mframe/shift_rdopt.hpp"
#include "mframe/transform.hpp"

namespace mframe {

enum class MergeMode : std::uint8_t { Fixed = 0, Optimized = 1 };
enum class BlockMode : std::uint8_t { Skip = 0, Intra = 1, Merge = 2 };

inline constexpr std::uint32_t kStreamMagic = 0x4D46524Du;  // "MFRM"
inline constexpr std::uint8_t kStreamVersion = 1;

struct CodecConfig {
  int block_edge = 16;
  ScanOrder scan = ScanOrder::ZigZag;
  MergeMode mode = MergeMode::Optimized;
  int qp_si = 30;
  std::optional<double> lambda;  // defaults to lambda_from_qp(qp_si)
  DistributionSearch search;
  bool rd_eob = true;              // optimized mode: RD-placed EOB
  bool frequency_fallback = true;  // per-frequency fixed-target parameters when cheaper
  bool frame_fallback = true;      // emit the fixed-mode stream when cheaper

  double effective_lambda() const;
  /// Quantizer step of the merge domain: Q_SI in fixed mode, 1 otherwise.
  double merge_qstep() const;
  int merge_qp() const;
  void validate() const;
};

struct StreamHeader {
  std::uint8_t version = kStreamVersion;
  int width = 0;
  int height = 0;
  int block_edge = 16;
  ScanOrder scan = ScanOrder::ZigZag;
  MergeMode mode = MergeMode::Optimized;
  bool fallback = false;  // optimized request, fixed construction emitted
  int si_count = 0;
  int qp_m = 0;
  double qstep = 1.0;   // qstep_from_qp(qp_m), not transmitted
  int qp_intra = 0;     // intra blocks are coded at QP_SI in both modes
  double intra_qstep = 1.0;
  double lambda = 0.0;  // encoder side only, not transmitted
};

struct BlockDecision {
  BlockMode mode = BlockMode::Skip;
  int eob = -1;  // last coded coefficient, -1 for none
};

enum class FrequencyKind : std::uint8_t { Uniform = 0, Spike = 1 };

struct FrequencyParams {
  bool present = false;
  FrequencyKind kind = FrequencyKind::Uniform;
  std::int64_t step = 1;
  ShiftDistribution dist;
};

/// Everything carried by one M-frame, in decoded form.
struct MFrameSyntax {
  StreamHeader header;
  std::vector<BlockDecision> blocks;
  std::vector<FrequencyParams> freqs;               // one per frequency
  std::vector<std::vector<std::int64_t>> shifts;    // merge blocks: eob + 1 shifts
  std::vector<std::vector<std::int32_t>> intra;     // intra blocks: K q-coeffs
};

struct EncodeReport {
  double distortion = 0.0;       // sum over blocks of the coefficient-domain error
  std::size_t rate_bits = 0;     // whole bitstream
  double lambda = 0.0;
  double lagrangian = 0.0;
  int skip_blocks = 0;
  int intra_blocks = 0;
  int merge_blocks = 0;
  int frequency_groups = 0;      // frequencies carrying parameters
  int fallback_frequencies = 0;  // frequencies using fixed-target parameters
  double ideal_shift_bits = 0.0;
  std::size_t shift_payload_bits = 0;
  std::array<std::size_t, 4> section_bits{};  // mode map, params, block data, shifts
  bool frame_fallback = false;
  MergeMode emitted_mode = MergeMode::Optimized;
};

struct EncodeResult {
  std::vector<std::uint8_t> bitstream;
  Frame reconstruction;
  std::vector<CoeffBlock> coefficients;  // reconstructed, scan order
  EncodeReport report;
};

struct DecodeResult {
  Frame frame;
  std::vector<CoeffBlock> coefficients;
  MFrameSyntax syntax;
};

EncodeResult encode_mframe(std::span<const Frame> si_frames, const Frame& target,
                           const CodecConfig& config);

DecodeResult decode_mframe_detailed(std::span<const std::uint8_t> bitstream, const Frame& si);
Frame decode_mframe(std::span<const std::uint8_t> bitstream, const Frame& si);

StreamHeader read_header(std::span<const std::uint8_t> bitstream);
MFrameSyntax parse_mframe(std::span<const std::uint8_t> bitstream);
/// `sections` receives the payload size of the mode map, parameter, block
/// data and shift sections, in bits.
std::vector<std::uint8_t> write_mframe(const MFrameSyntax& syntax,
                                       std::array<std::size_t, 4>* sections = nullptr);

/// Reconstructed coefficients for every block given one SI frame's q-coeffs.
std::vector<CoeffBlock> reconstruct_coefficients(const MFrameSyntax& syntax,
                                                 std::span<const QCoeffBlock> si_blocks);

/// Pixel frame the decoder produces for exact target q-coeffs `x0`.
Frame render_qcoeffs(std::span<const QCoeffBlock> x0, const BlockTransform& transform,
                     int width, int height);

// --- block-level building blocks, exposed for testing ----------------------

int last_nonzero(std::span<const std::int32_t> q) noexcept;

/// Rate-distortion EOB: coded_cost[k] is d(k) + lambda * bits(k) for a coded
/// coefficient, truncated coefficients cost y0[k]^2, the EOB itself costs
/// lambda * ue_length(eob + 1). Candidates are -1 .. coded_cost.size() - 1.
int place_eob_rd(std::span<const double> coded_cost, std::span<const double> y0, double lambda);

void encode_intra_block(BitWriter& out, std::span<const std::int32_t> q);
std::vector<std::int32_t> decode_intra_block(BitReader& in, int coeff_count);
std::size_t intra_block_bits(std::span<const std::int32_t> q);

/// Intra cost: exact q-coeffs at `qstep`, distortion against y0.
RdCost intra_cost(std::span<const std::int32_t> x0, std::span<const double> y0, double qstep);

/// SKIP when allowed, otherwise the lower Lagrangian (ties go to MERGE).
BlockMode mode_decide(bool skip_allowed, const RdCost& intra, const RdCost& merge, double lambda);

}  // namespace mframe

#endif  // MFRAME_CODEC_HPP
