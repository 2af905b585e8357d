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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "demokit/augment.hpp"
#include "demokit/error.hpp"
#include "demokit/rng.hpp"

using namespace demokit;
using namespace demokit::aug;
using demokit::img::ImageTensor;

namespace {

LabeledSample random_sample(int h, int w, uint64_t seed) {
  Rng rng(seed);
  LabeledSample s;
  s.image = ImageTensor(h, w);
  for (float& v : s.image.data) v = static_cast<float>(rng.uniform());
  s.label.dx = geom::Vec3(rng.normal(), rng.normal(), rng.normal());
  const geom::Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  s.label.w = geom::rotmat_to_6d(geom::quat_to_rotmat(q));
  s.label.g = grip::GripperState::kClose;
  return s;
}

bool images_equal(const ImageTensor& a, const ImageTensor& b) {
  return a.height == b.height && a.width == b.width && a.data == b.data;
}

bool labels_equal(const data::ActionLabel& a, const data::ActionLabel& b) {
  return a.dx == b.dx && a.w.v == b.w.v && a.g == b.g;
}

}  // namespace

TEST_CASE("jitter pinned factors are the identity") {
  const LabeledSample s = random_sample(16, 16, 1);
  const LabeledSample out = jitter_with(s, 1.0, 1.0, 1.0);
  CHECK(images_equal(out.image, s.image));
  CHECK(labels_equal(out.label, s.label));
}

TEST_CASE("jitter brightness is multiplicative") {
  LabeledSample s;
  s.image = ImageTensor::filled(8, 8, {0.5f, 0.5f, 0.5f});
  const LabeledSample out = jitter_with(s, 1.2, 1.0, 1.0);
  for (float v : out.image.data) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}

TEST_CASE("jitter contrast moves toward mean luminance") {
  LabeledSample s;
  s.image = ImageTensor::filled(4, 4, {0.8f, 0.8f, 0.8f});
  // constant image: mean luminance equals the pixel luminance, so any
  // contrast factor leaves it unchanged
  const LabeledSample out = jitter_with(s, 1.0, 0.85, 1.0);
  for (float v : out.image.data) CHECK(v == doctest::Approx(0.8f).epsilon(1e-6));
}

TEST_CASE("jitter keeps range and label") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const LabeledSample s = random_sample(12, 12, 900 + seed);
    const LabeledSample out = jitter(s, 0.2, seed);
    for (float v : out.image.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(labels_equal(out.label, s.label));
  }
}

TEST_CASE("crop at full size is the identity") {
  const LabeledSample s = random_sample(10, 14, 2);
  const LabeledSample out = crop(s, 10, 14, 5);
  CHECK(images_equal(out.image, s.image));
}

TEST_CASE("crop offsets stay in the margin and pixels map exactly") {
  // margin rule at the reference scale: 240 -> 224 leaves offsets in [0, 16]
  const LabeledSample s = random_sample(60, 60, 3);
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const LabeledSample out = crop(s, 44, 44, seed);
    CHECK(out.image.height == 44);
    CHECK(out.image.width == 44);
    // locate the offset via the first pixel, then verify the full mapping
    bool found = false;
    for (int oy = 0; oy <= 16 && !found; ++oy)
      for (int ox = 0; ox <= 16 && !found; ++ox) {
        if (out.image.at(0, 0, 0) != s.image.at(0, oy, ox)) continue;
        bool all = true;
        for (int c = 0; c < 3 && all; ++c)
          for (int y = 0; y < 44 && all; ++y)
            for (int x = 0; x < 44 && all; ++x)
              all = out.image.at(c, y, x) == s.image.at(c, y + oy, x + ox);
        found = all;
      }
    CHECK(found);
  }
  CHECK_THROWS_AS(crop(s, 61, 60, 0), InvalidArgument);
}

TEST_CASE("crop margin follows the reference ratio") {
  CHECK(crop_margin(240) == 16);
  CHECK(crop_margin(64) == 4);
  CHECK(cutout_range_for_width(224) == std::array<int, 2>{10, 60});
  CHECK(cutout_range_for_width(64)[0] == 3);
  CHECK(cutout_range_for_width(64)[1] == 17);
}

TEST_CASE("cutout: zero size identity, full cover, mask oracle") {
  const LabeledSample s = random_sample(20, 20, 4);
  CHECK(images_equal(cutout_at(s, 5, 5, 0, {1, 0, 0}).image, s.image));

  const LabeledSample full = cutout_at(s, 0, 0, 20, {0.25f, 0.5f, 0.75f});
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      CHECK(full.image.at(0, y, x) == 0.25f);
      CHECK(full.image.at(1, y, x) == 0.5f);
      CHECK(full.image.at(2, y, x) == 0.75f);
    }

  for (uint64_t seed = 0; seed < 30; ++seed) {
    const LabeledSample out = cutout_color(s, {3, 8}, seed);
    CHECK(labels_equal(out.label, s.label));
    // outside the (unique) painted box, pixels are bit-identical
    int changed = 0;
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x)
        if (out.image.at(0, y, x) != s.image.at(0, y, x) ||
            out.image.at(1, y, x) != s.image.at(1, y, x) ||
            out.image.at(2, y, x) != s.image.at(2, y, x))
          ++changed;
    CHECK(changed <= 8 * 8);
  }
}

TEST_CASE("rotate 0 degrees is the identity") {
  const LabeledSample s = random_sample(17, 17, 5);
  CHECK(images_equal(rotate_by(s, 0.0).image, s.image));
}

TEST_CASE("rotate 180 degrees flips both axes") {
  const LabeledSample s = random_sample(16, 16, 6);
  const LabeledSample out = rotate_by(s, 180.0);
  double max_err = 0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        max_err = std::max<double>(
            max_err,
            std::abs(out.image.at(c, y, x) - s.image.at(c, 15 - y, 15 - x)));
  CHECK(max_err < 1e-5);
}

TEST_CASE("rotate inverse composition is close to identity") {
  // smooth image: bilinear resampling error is only meaningful off noise
  LabeledSample s;
  s.image = ImageTensor(32, 32);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        s.image.at(c, y, x) = static_cast<float>(
            0.5 + 0.4 * std::sin(0.2 * x + 0.3 * c) * std::cos(0.17 * y));
  const LabeledSample out = rotate_by(rotate_by(s, 4.0), -4.0);
  double mean_abs = 0;
  for (size_t i = 0; i < s.image.data.size(); ++i)
    mean_abs += std::abs(out.image.data[i] - s.image.data[i]);
  mean_abs /= static_cast<double>(s.image.data.size());
  CHECK(mean_abs < 2.0 / 255.0);
  CHECK_THROWS_AS(rotate_small(s, 46.0, 0), InvalidArgument);
}

TEST_CASE("hreflect flips image columns and the label") {
  LabeledSample s = random_sample(8, 8, 8);
  s.label.dx = geom::Vec3(0.3, 0.1, 0.05);
  const LabeledSample out = hreflect(s);
  CHECK(out.label.dx == geom::Vec3(-0.3, 0.1, 0.05));
  CHECK(out.label.g == s.label.g);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(out.image.at(0, y, x) == s.image.at(0, y, 7 - x));
  // rotation conjugated through the mirror
  const geom::Mat3 expect =
      geom::conjugate_reflect(geom::rot6d_to_rotmat(s.label.w));
  CHECK((geom::rot6d_to_rotmat(out.label.w) - expect).norm() < 1e-12);
}

TEST_CASE("hreflect is an exact involution") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const LabeledSample s = random_sample(9, 12, 100 + seed);
    const LabeledSample twice = hreflect(hreflect(s));
    CHECK(images_equal(twice.image, s.image));
    CHECK(labels_equal(twice.label, s.label));
  }
}

TEST_CASE("apply_augments is deterministic and respects the seed") {
  const LabeledSample s = random_sample(64, 64, 9);
  const AugmentSet set = parse_augment_set("crop+jitter");
  const AugmentParams params;
  const LabeledSample a = apply_augments(s, set, params, 42);
  const LabeledSample b = apply_augments(s, set, params, 42);
  CHECK(images_equal(a.image, b.image));
  CHECK(labels_equal(a.label, b.label));
  const LabeledSample c = apply_augments(s, set, params, 43);
  CHECK(!images_equal(a.image, c.image));
  // crop margin rule: 64 -> 60
  CHECK(a.image.height == 60);
  CHECK(a.image.width == 60);
}

TEST_CASE("apply_augments without crop center-crops to the same dims") {
  const LabeledSample s = random_sample(64, 64, 10);
  const LabeledSample none = apply_augments(s, {}, AugmentParams{}, 1);
  CHECK(none.image.height == 60);
  CHECK(none.image.width == 60);
  // deterministic: no randomness consumed
  const LabeledSample again = apply_augments(s, {}, AugmentParams{}, 999);
  CHECK(images_equal(none.image, again.image));
}

TEST_CASE("label-preserving augmentations keep the label bit-identical") {
  const LabeledSample s = random_sample(64, 64, 11);
  for (const char* name : {"jitter", "crop", "cutout", "rotate"}) {
    const LabeledSample out =
        apply_augments(s, parse_augment_set(name), AugmentParams{}, 5);
    CHECK(labels_equal(out.label, s.label));
  }
}

TEST_CASE("augment set parsing round trip") {
  CHECK(parse_augment_set("none").empty());
  CHECK(parse_augment_set("").empty());
  const AugmentSet set = parse_augment_set("rotate+jitter");
  REQUIRE(set.size() == 2);
  CHECK(set[0] == AugmentKind::kRotate);
  CHECK(set[1] == AugmentKind::kJitter);
  CHECK(augment_set_name(set) == "rotate+jitter");
  CHECK(augment_set_name({}) == "none");
  CHECK_THROWS_AS(parse_augment_set("crop+sparkle"), InvalidArgument);
}
