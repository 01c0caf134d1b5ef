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

#ifndef MFRAME_BIT_IO_HPP
#define MFRAME_BIT_IO_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace mframe {

/// MSB-first bit writer. Multi-bit fields are big-endian.
class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint64_t value, int count);
  void put_ue(std::uint64_t value);  // unsigned exp-Golomb
  void put_se(std::int64_t value);   // signed exp-Golomb
  void put_double(double value);
  void put_bytes(std::span<const std::uint8_t> bytes);

  /// Pads with zero bits up to the next byte boundary.
  void align();

  std::size_t bit_count() const noexcept { return bits_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t bits_ = 0;
};

/// Reader over a borrowed byte range; throws ErrorKind::Malformed on
/// overrun.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

  bool get_bit();
  std::uint64_t get_bits(int count);
  std::uint64_t get_ue();
  std::int64_t get_se();
  double get_double();
  std::span<const std::uint8_t> get_bytes(std::size_t count);

  void align();
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining_bits() const noexcept { return data_.size() * 8 - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Length in bits of the exp-Golomb codeword for `value`.
int ue_length(std::uint64_t value) noexcept;
int se_length(std::int64_t value) noexcept;

/// Signed -> unsigned mapping used by put_se: 1, -1, 2, -2 ... -> 1, 2, 3, 4.
std::uint64_t se_remap(std::int64_t value) noexcept;

/// Number of bits needed to index `count` values (0 for count <= 1).
int index_bits(std::uint64_t count) noexcept;

}  // namespace mframe

#endif  // MFRAME_BIT_IO_HPP
