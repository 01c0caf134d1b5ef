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

#include "mframe/frame.hpp"

#include <cmath>
#include <fstream>

#include "mframe/error.hpp"

namespace mframe {

Frame::Frame(int width, int height, std::string id)
    : width_(width), height_(height), id_(std::move(id)) {
  if (width <= 0 || height <= 0)
    fail(ErrorKind::Config, "frame dimensions must be positive");
  samples_.assign(static_cast<std::size_t>(width) * height, 0);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> samples,
             std::string id)
    : width_(width), height_(height), samples_(std::move(samples)),
      id_(std::move(id)) {
  if (width <= 0 || height <= 0)
    fail(ErrorKind::Config, "frame dimensions must be positive");
  if (samples_.size() != static_cast<std::size_t>(width) * height)
    fail(ErrorKind::Structure, "sample count does not match " +
                                   std::to_string(width) + "x" +
                                   std::to_string(height));
}

Frame read_raw(const std::filesystem::path& path, int width, int height,
               int frame_index, bool yuv420) {
  if (width <= 0 || height <= 0)
    fail(ErrorKind::Config, "raw frame dimensions must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());

  const auto luma = static_cast<std::streamoff>(width) * height;
  const auto stride = yuv420 ? luma + 2 * ((width / 2) * (height / 2)) : luma;
  in.seekg(stride * frame_index, std::ios::beg);

  std::vector<std::uint8_t> samples(static_cast<std::size_t>(luma));
  in.read(reinterpret_cast<char*>(samples.data()), luma);
  if (in.gcount() != luma)
    fail(ErrorKind::Io, "short read from " + path.string());
  return Frame(width, height, std::move(samples), path.filename().string());
}

void write_raw(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(frame.samples().data()),
            static_cast<std::streamsize>(frame.samples().size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::uint8_t to_pixel(double value) noexcept {
  const double r = std::round(value);  // half away from zero
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace mframe
