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

#include "mframe/range_coder.hpp"

#include <algorithm>
#include <cmath>

#include "mframe/error.hpp"

namespace mframe {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint64_t kDirectUniformLimit = 1u << 16;
constexpr int kAdaptShift = 4;
}  // namespace

std::uint32_t clamp_prob(double p_zero) noexcept {
  const double scaled = std::round(p_zero * kProbOne);
  if (!(scaled >= 1.0)) return 1;
  if (scaled >= kProbOne - 1.0) return kProbOne - 1;
  return static_cast<std::uint32_t>(scaled);
}

void RangeEncoder::encode(bool bit, std::uint32_t p_zero) {
  const std::uint32_t bound = (range_ >> kProbBits) * p_zero;
  if (!bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_uniform(std::uint64_t value, std::uint64_t count) {
  if (value >= count) fail(ErrorKind::Contract, "uniform symbol out of range");
  if (count <= 1) return;
  if (count > kDirectUniformLimit) {
    const std::uint64_t hi_count = (count + kDirectUniformLimit - 1) / kDirectUniformLimit;
    encode_uniform(value / kDirectUniformLimit, hi_count);
    const std::uint64_t base = value / kDirectUniformLimit * kDirectUniformLimit;
    encode_uniform(value - base, std::min(kDirectUniformLimit, count - base));
    return;
  }
  const std::uint32_t step = range_ / static_cast<std::uint32_t>(count);
  low_ += static_cast<std::uint64_t>(step) * value;
  range_ = step;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (low_ < 0xFF000000u || low_ >= (std::uint64_t{1} << 32)) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    if (!first_) out_.push_back(static_cast<std::uint8_t>(cache_ + carry));
    first_ = false;
    for (; pending_ > 0; --pending_)
      out_.push_back(static_cast<std::uint8_t>(0xFFu + carry));
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  } else {
    ++pending_;
  }
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  // Trailing zero bytes are implied: the decoder reads zeros past the end.
  while (!out_.empty() && out_.back() == 0) out_.pop_back();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < in_.size()) return in_[pos_++];
  ++pos_;
  // A few implicit trailing zeros are legal (trimmed by the encoder).
  if (pos_ > in_.size() + 8) overrun_ = true;
  return 0;
}

bool RangeDecoder::decode(std::uint32_t p_zero) {
  const std::uint32_t bound = (range_ >> kProbBits) * p_zero;
  bool bit;
  if (code_ < bound) {
    range_ = bound;
    bit = false;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = true;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return bit;
}

std::uint64_t RangeDecoder::decode_uniform(std::uint64_t count) {
  if (count <= 1) return 0;
  if (count > kDirectUniformLimit) {
    const std::uint64_t hi_count = (count + kDirectUniformLimit - 1) / kDirectUniformLimit;
    const std::uint64_t base = decode_uniform(hi_count) * kDirectUniformLimit;
    return base + decode_uniform(std::min(kDirectUniformLimit, count - base));
  }
  const std::uint32_t step = range_ / static_cast<std::uint32_t>(count);
  std::uint64_t value = code_ / step;
  if (value >= count) {
    value = count - 1;
    overrun_ = true;  // only reachable on corrupted input
  }
  code_ -= static_cast<std::uint32_t>(value) * step;
  range_ = step;
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return value;
}

void AdaptiveBit::update(bool bit) {
  if (bit)
    p_zero_ -= p_zero_ >> kAdaptShift;
  else
    p_zero_ += (kProbOne - p_zero_) >> kAdaptShift;
  p_zero_ = std::clamp<std::uint32_t>(p_zero_, 31, kProbOne - 31);
}

void AdaptiveBit::encode(RangeEncoder& enc, bool bit) {
  enc.encode(bit, p_zero_);
  update(bit);
}

bool AdaptiveBit::decode(RangeDecoder& dec) {
  const bool bit = dec.decode(p_zero_);
  update(bit);
  return bit;
}

}  // namespace mframe
