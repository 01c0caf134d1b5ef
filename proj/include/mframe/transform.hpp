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

#ifndef MFRAME_TRANSFORM_HPP
#define MFRAME_TRANSFORM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mframe/frame.hpp"

namespace mframe {

enum class ScanOrder : std::uint8_t { ZigZag = 0, Raster = 1 };

/// Square block of samples, row-major, with its raster position in the frame.
struct PixelBlock {
  int edge = 0;
  int index = 0;
  std::vector<double> samples;
};

/// Transform coefficients of one block in scan order (DC first).
struct CoeffBlock {
  int index = 0;
  std::vector<double> coeffs;
};

/// Quantized coefficients X(k) = round(Y(k)/Q).
struct QCoeffBlock {
  int index = 0;
  double step = 1.0;
  std::vector<std::int32_t> qcoeffs;
};

bool valid_block_edge(int edge) noexcept;

/// Splits a frame into edge x edge blocks in raster order.
std::vector<PixelBlock> partition(const Frame& frame, int edge);

/// Writes reconstructed blocks back into a frame, rounding half away from
/// zero and clipping to [0, 255].
Frame assemble(std::span<const PixelBlock> blocks, int width, int height);

/// Scan position -> row-major position for an edge x edge block.
std::vector<int> scan_table(int edge, ScanOrder order);

/// Orthonormal separable 2D DCT-II with a fixed coefficient scan.
/// Immutable after construction; safe to share between threads.
class BlockTransform {
 public:
  explicit BlockTransform(int edge, ScanOrder order = ScanOrder::ZigZag);

  int edge() const noexcept { return edge_; }
  int size() const noexcept { return edge_ * edge_; }
  ScanOrder order() const noexcept { return order_; }
  const std::vector<int>& scan() const noexcept { return scan_; }

  CoeffBlock forward(const PixelBlock& block) const;
  PixelBlock inverse(const CoeffBlock& coeffs) const;

 private:
  int edge_;
  ScanOrder order_;
  std::vector<double> basis_;  // basis_[u * edge + x]
  std::vector<int> scan_;
};

/// Rounds half away from zero.
std::int32_t round_half_away(double v) noexcept;

QCoeffBlock quantize(const CoeffBlock& coeffs, double step);
CoeffBlock dequantize(const QCoeffBlock& q);

/// Forward transform plus quantization of every block in a frame.
std::vector<QCoeffBlock> analyze_frame(const Frame& frame,
                                       const BlockTransform& transform,
                                       double step);

/// H.264-style quantizer step for a QP: 2^((qp - 4) / 6).
double qstep_from_qp(double qp) noexcept;

}  // namespace mframe

#endif  // MFRAME_TRANSFORM_HPP
