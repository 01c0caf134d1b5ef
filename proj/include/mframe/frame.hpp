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

#ifndef MFRAME_FRAME_HPP
#define MFRAME_FRAME_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mframe {

/// 8-bit luma picture. Samples are stored row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::string id = {});
  Frame(int width, int height, std::vector<std::uint8_t> samples,
        std::string id = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::string& id() const noexcept { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  std::uint8_t at(int x, int y) const { return samples_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return samples_[index(x, y)]; }

  const std::vector<std::uint8_t>& samples() const noexcept { return samples_; }
  std::vector<std::uint8_t>& samples() noexcept { return samples_; }

  bool same_shape(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  // Pixel equality; the id is a label and does not participate.
  friend bool operator==(const Frame& a, const Frame& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.samples_ == b.samples_;
  }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
  std::string id_;
};

/// Reads one planar 8-bit grayscale picture. When the file holds a YUV
/// sequence, `frame_index` selects the picture and only its Y plane is read
/// (4:2:0 layout assumed when `yuv420` is set).
Frame read_raw(const std::filesystem::path& path, int width, int height,
               int frame_index = 0, bool yuv420 = false);

void write_raw(const std::filesystem::path& path, const Frame& frame);

/// Rounds half away from zero and clips into the 8-bit range.
std::uint8_t to_pixel(double value) noexcept;

}  // namespace mframe

#endif  // MFRAME_FRAME_HPP
