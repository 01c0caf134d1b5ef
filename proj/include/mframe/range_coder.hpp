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

#ifndef MFRAME_RANGE_CODER_HPP
#define MFRAME_RANGE_CODER_HPP

// Binary range coder with 12-bit probabilities. Carries propagate through a
// cached byte plus a run of pending 0xFF bytes; the always-zero leading byte
// of the classic scheme is not emitted.

#include <cstdint>
#include <span>
#include <vector>

namespace mframe {

inline constexpr int kProbBits = 12;
inline constexpr std::uint32_t kProbOne = 1u << kProbBits;

/// Probability of a zero bit, in units of 1/4096, clamped to [1, 4095].
std::uint32_t clamp_prob(double p_zero) noexcept;

class RangeEncoder {
 public:
  void encode(bool bit, std::uint32_t p_zero);
  /// Encodes `value` in [0, count) with (approximately) equal probability.
  void encode_uniform(std::uint64_t value, std::uint64_t count);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 0;
  bool first_ = true;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  bool decode(std::uint32_t p_zero);
  std::uint64_t decode_uniform(std::uint64_t count);

  /// True once the decoder has consumed bytes past the end of its input.
  bool overrun() const noexcept { return overrun_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
  bool overrun_ = false;
};

/// Adaptive probability for one binary context.
class AdaptiveBit {
 public:
  void encode(RangeEncoder& enc, bool bit);
  bool decode(RangeDecoder& dec);

 private:
  void update(bool bit);
  std::uint32_t p_zero_ = kProbOne / 2;
};

}  // namespace mframe

#endif  // MFRAME_RANGE_CODER_HPP
