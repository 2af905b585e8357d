// Copyright 2026 The demokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace demokit::img {

/// RGB image, values in [0, 1], planar channel-major storage:
/// data[c * h * w + y * w + x].
struct ImageTensor {
  int height = 0;
  int width = 0;
  static constexpr int kChannels = 3;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w) : height(h), width(w), data(3u * h * w, 0.0f) {}

  static ImageTensor filled(int h, int w, std::array<float, 3> rgb);

  float& at(int c, int y, int x) {
    return data[static_cast<size_t>(c) * height * width +
                static_cast<size_t>(y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[static_cast<size_t>(c) * height * width +
                static_cast<size_t>(y) * width + x];
  }
  size_t size() const { return data.size(); }

  void clamp01();
};

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& file, const ImageTensor& im);
ImageTensor read_ppm(const std::filesystem::path& file);

/// 8-bit round trip used by the in-memory frame cache.
std::vector<uint8_t> to_bytes(const ImageTensor& im);
ImageTensor from_bytes(const std::vector<uint8_t>& bytes, int h, int w);

}  // namespace demokit::img
