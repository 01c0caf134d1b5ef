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

#include "mframe/transform.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mframe/error.hpp"

namespace mframe {

bool valid_block_edge(int edge) noexcept {
  return edge == 4 || edge == 8 || edge == 16;
}

std::vector<PixelBlock> partition(const Frame& frame, int edge) {
  if (!valid_block_edge(edge))
    fail(ErrorKind::Config,
         "block edge must be 4, 8 or 16 (got " + std::to_string(edge) + ")");
  if (frame.width() % edge != 0)
    fail(ErrorKind::Config, "frame width " + std::to_string(frame.width()) +
                                " is not divisible by block edge " +
                                std::to_string(edge));
  if (frame.height() % edge != 0)
    fail(ErrorKind::Config, "frame height " + std::to_string(frame.height()) +
                                " is not divisible by block edge " +
                                std::to_string(edge));

  const int cols = frame.width() / edge;
  const int rows = frame.height() / edge;
  std::vector<PixelBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(cols) * rows);
  for (int by = 0; by < rows; ++by) {
    for (int bx = 0; bx < cols; ++bx) {
      PixelBlock b;
      b.edge = edge;
      b.index = by * cols + bx;
      b.samples.resize(static_cast<std::size_t>(edge) * edge);
      for (int y = 0; y < edge; ++y)
        for (int x = 0; x < edge; ++x)
          b.samples[y * edge + x] = frame.at(bx * edge + x, by * edge + y);
      blocks.push_back(std::move(b));
    }
  }
  return blocks;
}

Frame assemble(std::span<const PixelBlock> blocks, int width, int height) {
  Frame out(width, height);
  if (blocks.empty()) return out;
  const int edge = blocks.front().edge;
  const int cols = width / edge;
  if (static_cast<int>(blocks.size()) != cols * (height / edge))
    fail(ErrorKind::Structure, "block count does not cover the frame");
  for (const auto& b : blocks) {
    const int bx = b.index % cols;
    const int by = b.index / cols;
    for (int y = 0; y < edge; ++y)
      for (int x = 0; x < edge; ++x)
        out.at(bx * edge + x, by * edge + y) = to_pixel(b.samples[y * edge + x]);
  }
  return out;
}

std::vector<int> scan_table(int edge, ScanOrder order) {
  std::vector<int> table;
  table.reserve(static_cast<std::size_t>(edge) * edge);
  if (order == ScanOrder::Raster) {
    for (int i = 0; i < edge * edge; ++i) table.push_back(i);
    return table;
  }
  // JPEG zig-zag: walk anti-diagonals, alternating direction.
  for (int d = 0; d < 2 * edge - 1; ++d) {
    const int lo = d < edge ? 0 : d - edge + 1;
    const int hi = d < edge ? d : edge - 1;
    if (d % 2 == 0) {
      for (int row = hi; row >= lo; --row) table.push_back(row * edge + (d - row));
    } else {
      for (int row = lo; row <= hi; ++row) table.push_back(row * edge + (d - row));
    }
  }
  return table;
}

BlockTransform::BlockTransform(int edge, ScanOrder order)
    : edge_(edge), order_(order) {
  if (!valid_block_edge(edge))
    fail(ErrorKind::Config,
         "block edge must be 4, 8 or 16 (got " + std::to_string(edge) + ")");
  basis_.resize(static_cast<std::size_t>(edge) * edge);
  const double n = edge;
  for (int u = 0; u < edge; ++u) {
    const double scale = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int x = 0; x < edge; ++x)
      basis_[u * edge + x] =
          scale * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * n));
  }
  scan_ = scan_table(edge, order);
}

CoeffBlock BlockTransform::forward(const PixelBlock& block) const {
  const int n = edge_;
  if (block.edge != n || static_cast<int>(block.samples.size()) != n * n)
    fail(ErrorKind::Structure, "block shape does not match the transform");

  // rows first, then columns
  std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
  for (int y = 0; y < n; ++y)
    for (int u = 0; u < n; ++u) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) acc += basis_[u * n + x] * block.samples[y * n + x];
      tmp[y * n + u] = acc;
    }
  std::vector<double> freq(static_cast<std::size_t>(n) * n, 0.0);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y) acc += basis_[v * n + y] * tmp[y * n + u];
      freq[v * n + u] = acc;
    }

  CoeffBlock out;
  out.index = block.index;
  out.coeffs.resize(freq.size());
  for (std::size_t k = 0; k < scan_.size(); ++k) out.coeffs[k] = freq[scan_[k]];
  return out;
}

PixelBlock BlockTransform::inverse(const CoeffBlock& coeffs) const {
  const int n = edge_;
  if (static_cast<int>(coeffs.coeffs.size()) != n * n)
    fail(ErrorKind::Structure, "coefficient count does not match the transform");

  std::vector<double> freq(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t k = 0; k < scan_.size(); ++k) freq[scan_[k]] = coeffs.coeffs[k];

  std::vector<double> tmp(freq.size(), 0.0);
  for (int y = 0; y < n; ++y)
    for (int u = 0; u < n; ++u) {
      double acc = 0.0;
      for (int v = 0; v < n; ++v) acc += basis_[v * n + y] * freq[v * n + u];
      tmp[y * n + u] = acc;
    }
  PixelBlock out;
  out.edge = n;
  out.index = coeffs.index;
  out.samples.assign(freq.size(), 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int u = 0; u < n; ++u) acc += basis_[u * n + x] * tmp[y * n + u];
      out.samples[y * n + x] = acc;
    }
  return out;
}

std::int32_t round_half_away(double v) noexcept {
  return static_cast<std::int32_t>(std::round(v));
}

QCoeffBlock quantize(const CoeffBlock& coeffs, double step) {
  if (!(step > 0.0))
    fail(ErrorKind::Config, "quantizer step must be positive");
  QCoeffBlock q;
  q.index = coeffs.index;
  q.step = step;
  q.qcoeffs.reserve(coeffs.coeffs.size());
  for (double y : coeffs.coeffs) q.qcoeffs.push_back(round_half_away(y / step));
  return q;
}

CoeffBlock dequantize(const QCoeffBlock& q) {
  CoeffBlock out;
  out.index = q.index;
  out.coeffs.reserve(q.qcoeffs.size());
  for (auto x : q.qcoeffs) out.coeffs.push_back(x * q.step);
  return out;
}

std::vector<QCoeffBlock> analyze_frame(const Frame& frame,
                                       const BlockTransform& transform,
                                       double step) {
  std::vector<QCoeffBlock> out;
  for (const auto& block : partition(frame, transform.edge()))
    out.push_back(quantize(transform.forward(block), step));
  return out;
}

double qstep_from_qp(double qp) noexcept {
  return std::exp2((qp - 4.0) / 6.0);
}

}  // namespace mframe
