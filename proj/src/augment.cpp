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

#include "demokit/augment.hpp"

#include <algorithm>
#include <cmath>

#include "demokit/error.hpp"
#include "demokit/rng.hpp"

namespace demokit::aug {

namespace {

constexpr float kLumR = 0.299f, kLumG = 0.587f, kLumB = 0.114f;

float luminance(const img::ImageTensor& im, int y, int x) {
  return kLumR * im.at(0, y, x) + kLumG * im.at(1, y, x) +
         kLumB * im.at(2, y, x);
}

}  // namespace

AugmentSet parse_augment_set(const std::string& text) {
  AugmentSet set;
  if (text.empty() || text == "none") return set;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t plus = text.find('+', start);
    const std::string name = text.substr(
        start, plus == std::string::npos ? std::string::npos : plus - start);
    if (name == "jitter")
      set.push_back(AugmentKind::kJitter);
    else if (name == "crop")
      set.push_back(AugmentKind::kCrop);
    else if (name == "cutout")
      set.push_back(AugmentKind::kCutout);
    else if (name == "rotate")
      set.push_back(AugmentKind::kRotate);
    else if (name == "hreflect")
      set.push_back(AugmentKind::kHReflect);
    else
      throw InvalidArgument("unknown augmentation '" + name + "'");
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return set;
}

std::string augment_set_name(const AugmentSet& set) {
  if (set.empty()) return "none";
  std::string out;
  for (AugmentKind k : set) {
    if (!out.empty()) out += '+';
    switch (k) {
      case AugmentKind::kJitter: out += "jitter"; break;
      case AugmentKind::kCrop: out += "crop"; break;
      case AugmentKind::kCutout: out += "cutout"; break;
      case AugmentKind::kRotate: out += "rotate"; break;
      case AugmentKind::kHReflect: out += "hreflect"; break;
    }
  }
  return out;
}

int crop_margin(int width) {
  return static_cast<int>(std::lround(width * 16.0 / 240.0));
}

std::array<int, 2> cutout_range_for_width(int width) {
  const int lo = std::max(1, static_cast<int>(std::lround(10.0 * width / 224.0)));
  const int hi = std::max(lo, static_cast<int>(std::lround(60.0 * width / 224.0)));
  return {lo, hi};
}

LabeledSample jitter_with(LabeledSample s, double brightness, double contrast,
                          double saturation) {
  img::ImageTensor& im = s.image;
  const int h = im.height, w = im.width;
  if (brightness != 1.0) {
    const float f = static_cast<float>(brightness);
    for (float& v : im.data) v *= f;
  }
  if (contrast != 1.0) {
    double mean = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mean += luminance(im, y, x);
    const float m = static_cast<float>(mean / (static_cast<double>(h) * w));
    const float f = static_cast<float>(contrast);
    for (float& v : im.data) v = m + f * (v - m);
  }
  if (saturation != 1.0) {
    const float f = static_cast<float>(saturation);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float g = luminance(im, y, x);
        for (int c = 0; c < 3; ++c) {
          float& v = im.at(c, y, x);
          v = g + f * (v - g);
        }
      }
  }
  if (brightness != 1.0 || contrast != 1.0 || saturation != 1.0) im.clamp01();
  return s;
}

LabeledSample jitter(LabeledSample s, double strength, uint64_t seed) {
  Rng rng(seed);
  const double b = rng.uniform(1.0 - strength, 1.0 + strength);
  const double c = rng.uniform(1.0 - strength, 1.0 + strength);
  const double sat = rng.uniform(1.0 - strength, 1.0 + strength);
  return jitter_with(std::move(s), b, c, sat);
}

LabeledSample crop_at(LabeledSample s, int oy, int ox, int out_h, int out_w) {
  const img::ImageTensor& in = s.image;
  if (out_h > in.height || out_w > in.width)
    throw InvalidArgument("crop: output larger than input");
  if (oy < 0 || ox < 0 || oy + out_h > in.height || ox + out_w > in.width)
    throw InvalidArgument("crop: offset out of range");
  img::ImageTensor out(out_h, out_w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) out.at(c, y, x) = in.at(c, y + oy, x + ox);
  s.image = std::move(out);
  return s;
}

LabeledSample crop(LabeledSample s, int out_h, int out_w, uint64_t seed) {
  Rng rng(seed);
  const int ry = s.image.height - out_h;
  const int rx = s.image.width - out_w;
  if (ry < 0 || rx < 0) throw InvalidArgument("crop: output larger than input");
  const int oy = static_cast<int>(rng.below(static_cast<uint64_t>(ry) + 1));
  const int ox = static_cast<int>(rng.below(static_cast<uint64_t>(rx) + 1));
  return crop_at(std::move(s), oy, ox, out_h, out_w);
}

LabeledSample center_crop(LabeledSample s, int out_h, int out_w) {
  return crop_at(std::move(s), (s.image.height - out_h) / 2,
                 (s.image.width - out_w) / 2, out_h, out_w);
}

LabeledSample cutout_at(LabeledSample s, int y0, int x0, int side,
                        std::array<float, 3> rgb) {
  if (side <= 0) return s;
  img::ImageTensor& im = s.image;
  const int y1 = std::min(im.height, y0 + side);
  const int x1 = std::min(im.width, x0 + side);
  for (int c = 0; c < 3; ++c)
    for (int y = std::max(0, y0); y < y1; ++y)
      for (int x = std::max(0, x0); x < x1; ++x) im.at(c, y, x) = rgb[c];
  return s;
}

LabeledSample cutout_color(LabeledSample s, std::array<int, 2> size_range,
                           uint64_t seed) {
  Rng rng(seed);
  const int lo = size_range[0], hi = size_range[1];
  if (lo > hi || lo < 0) throw InvalidArgument("cutout: bad size range");
  const int side = lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo) + 1));
  const int y0 = static_cast<int>(rng.below(static_cast<uint64_t>(s.image.height)));
  const int x0 = static_cast<int>(rng.below(static_cast<uint64_t>(s.image.width)));
  const std::array<float, 3> rgb{static_cast<float>(rng.uniform()),
                                 static_cast<float>(rng.uniform()),
                                 static_cast<float>(rng.uniform())};
  return cutout_at(std::move(s), y0, x0, side, rgb);
}

LabeledSample rotate_by(LabeledSample s, double degrees) {
  if (degrees == 0.0) return s;
  const img::ImageTensor in = s.image;
  img::ImageTensor out(in.height, in.width);
  const double rad = degrees * M_PI / 180.0;
  const double ct = std::cos(rad), st = std::sin(rad);
  const double cy = (in.height - 1) / 2.0, cx = (in.width - 1) / 2.0;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      // inverse map, edge replication via clamping
      const double dy = y - cy, dx = x - cx;
      double sx = cx + ct * dx + st * dy;
      double sy = cy - st * dx + ct * dy;
      sx = std::clamp(sx, 0.0, static_cast<double>(in.width - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(in.height - 1));
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, in.width - 1);
      const int y1 = std::min(y0 + 1, in.height - 1);
      const float fx = static_cast<float>(sx - x0), fy = static_cast<float>(sy - y0);
      for (int c = 0; c < 3; ++c) {
        const float v0 = in.at(c, y0, x0) * (1 - fx) + in.at(c, y0, x1) * fx;
        const float v1 = in.at(c, y1, x0) * (1 - fx) + in.at(c, y1, x1) * fx;
        out.at(c, y, x) = v0 * (1 - fy) + v1 * fy;
      }
    }
  }
  s.image = std::move(out);
  return s;
}

LabeledSample rotate_small(LabeledSample s, double deg_range, uint64_t seed) {
  if (!(deg_range >= 0.0 && deg_range <= 45.0))
    throw InvalidArgument("rotate: range must be within [0, 45] degrees");
  Rng rng(seed);
  return rotate_by(std::move(s), rng.uniform(-deg_range, deg_range));
}

LabeledSample hreflect(LabeledSample s) {
  img::ImageTensor& im = s.image;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width / 2; ++x)
        std::swap(im.at(c, y, x), im.at(c, y, im.width - 1 - x));
  s.label.dx.x() = -s.label.dx.x();
  s.label.w = geom::reflect_6d(s.label.w);
  return s;
}

LabeledSample apply_augments(LabeledSample s, const AugmentSet& set,
                             const AugmentParams& params, uint64_t seed) {
  auto has = [&](AugmentKind k) {
    return std::find(set.begin(), set.end(), k) != set.end();
  };
  const int out_h = params.crop_out_h > 0
                        ? params.crop_out_h
                        : s.image.height - crop_margin(s.image.height);
  const int out_w = params.crop_out_w > 0
                        ? params.crop_out_w
                        : s.image.width - crop_margin(s.image.width);

  // geometric ops first
  if (has(AugmentKind::kCrop))
    s = crop(std::move(s), out_h, out_w, mix_seed({seed, 1}));
  else
    s = center_crop(std::move(s), out_h, out_w);
  if (has(AugmentKind::kRotate))
    s = rotate_small(std::move(s), params.rotate_max_deg, mix_seed({seed, 2}));
  if (has(AugmentKind::kHReflect)) {
    Rng rng(mix_seed({seed, 3}));
    if (rng.bernoulli(params.hreflect_prob)) s = hreflect(std::move(s));
  }
  // photometric ops second
  if (has(AugmentKind::kJitter))
    s = jitter(std::move(s), params.jitter_strength, mix_seed({seed, 4}));
  if (has(AugmentKind::kCutout)) {
    const std::array<int, 2> range =
        params.cutout_max > 0 ? std::array<int, 2>{params.cutout_min, params.cutout_max}
                              : cutout_range_for_width(s.image.width);
    s = cutout_color(std::move(s), range, mix_seed({seed, 5}));
  }
  return s;
}

}  // namespace demokit::aug
