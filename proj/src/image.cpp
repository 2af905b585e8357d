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

#include "demokit/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "demokit/error.hpp"

namespace demokit::img {

ImageTensor ImageTensor::filled(int h, int w, std::array<float, 3> rgb) {
  ImageTensor im(h, w);
  for (int c = 0; c < 3; ++c)
    std::fill_n(im.data.begin() + static_cast<size_t>(c) * h * w,
                static_cast<size_t>(h) * w, rgb[c]);
  return im;
}

void ImageTensor::clamp01() {
  for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
}

std::vector<uint8_t> to_bytes(const ImageTensor& im) {
  std::vector<uint8_t> out(im.data.size());
  for (size_t i = 0; i < im.data.size(); ++i)
    out[i] = static_cast<uint8_t>(
        std::lround(std::clamp(im.data[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

ImageTensor from_bytes(const std::vector<uint8_t>& bytes, int h, int w) {
  if (bytes.size() != 3u * h * w)
    throw InvalidArgument("from_bytes: size mismatch");
  ImageTensor im(h, w);
  for (size_t i = 0; i < bytes.size(); ++i)
    im.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return im;
}

void write_ppm(const std::filesystem::path& file, const ImageTensor& im) {
  if (!file.parent_path().empty())
    std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << "P6\n" << im.width << " " << im.height << "\n255\n";
  // interleave planar channels
  std::vector<uint8_t> row(static_cast<size_t>(im.width) * 3);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[3 * x + c] = static_cast<uint8_t>(
            std::lround(std::clamp(im.at(c, y, x), 0.0f, 1.0f) * 255.0f));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + file.string());
}

ImageTensor read_ppm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw ParseError(file.string() + ": not a P6 PPM");
  int w = 0, h = 0, maxval = 0;
  // '#' comments may appear between header tokens
  auto next_int = [&](int& v) {
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> v)) throw ParseError(file.string() + ": bad PPM header");
      return;
    }
  };
  next_int(w);
  next_int(h);
  next_int(maxval);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw ParseError(file.string() + ": unsupported PPM header");
  in.get();  // single whitespace after maxval
  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ParseError(file.string() + ": truncated pixel data");
  ImageTensor im(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        im.at(c, y, x) =
            static_cast<float>(raw[(static_cast<size_t>(y) * w + x) * 3 + c]) /
            255.0f;
  return im;
}

}  // namespace demokit::img
