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

#include "mframe/bit_io.hpp"

#include <bit>
#include <cstring>

#include "mframe/error.hpp"

namespace mframe {

void BitWriter::put_bit(bool bit) {
  if (bits_ % 8 == 0) buf_.push_back(0);
  if (bit) buf_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void BitWriter::put_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put_bit((value >> i) & 1u);
}

void BitWriter::put_ue(std::uint64_t value) {
  const std::uint64_t v = value + 1;
  const int len = std::bit_width(v);
  put_bits(0, len - 1);
  put_bits(v, len);
}

void BitWriter::put_se(std::int64_t value) { put_ue(se_remap(value)); }

void BitWriter::put_double(double value) {
  put_bits(std::bit_cast<std::uint64_t>(value), 64);
}

void BitWriter::put_bytes(std::span<const std::uint8_t> bytes) {
  for (auto b : bytes) put_bits(b, 8);
}

void BitWriter::align() {
  while (bits_ % 8 != 0) put_bit(false);
}

bool BitReader::get_bit() {
  if (pos_ >= data_.size() * 8) fail(ErrorKind::Malformed, "bitstream overrun");
  const bool bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return bit;
}

std::uint64_t BitReader::get_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
  return v;
}

std::uint64_t BitReader::get_ue() {
  int zeros = 0;
  while (!get_bit()) {
    if (++zeros > 63) fail(ErrorKind::Malformed, "exp-Golomb prefix too long");
  }
  const std::uint64_t tail = get_bits(zeros);
  return ((std::uint64_t{1} << zeros) | tail) - 1;
}

std::int64_t BitReader::get_se() {
  const std::uint64_t k = get_ue();
  const auto half = static_cast<std::int64_t>((k + 1) / 2);
  return (k % 2 == 1) ? half : -half;
}

double BitReader::get_double() { return std::bit_cast<double>(get_bits(64)); }

std::span<const std::uint8_t> BitReader::get_bytes(std::size_t count) {
  if (pos_ % 8 != 0) fail(ErrorKind::Malformed, "unaligned byte read");
  const std::size_t start = pos_ / 8;
  if (start + count > data_.size()) fail(ErrorKind::Malformed, "bitstream overrun");
  pos_ += count * 8;
  return data_.subspan(start, count);
}

void BitReader::align() { pos_ = (pos_ + 7) / 8 * 8; }

int ue_length(std::uint64_t value) noexcept {
  return 2 * std::bit_width(value + 1) - 1;
}

std::uint64_t se_remap(std::int64_t value) noexcept {
  return value > 0 ? static_cast<std::uint64_t>(2 * value - 1)
                   : static_cast<std::uint64_t>(-2 * value);
}

int se_length(std::int64_t value) noexcept { return ue_length(se_remap(value)); }

int index_bits(std::uint64_t count) noexcept {
  return count <= 1 ? 0 : std::bit_width(count - 1);
}

}  // namespace mframe
