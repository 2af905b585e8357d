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
#include <string>
#include <vector>

#include "demokit/dataset.hpp"
#include "demokit/image.hpp"

namespace demokit::aug {

struct LabeledSample {
  img::ImageTensor image;
  data::ActionLabel label;
};

enum class AugmentKind { kJitter, kCrop, kCutout, kRotate, kHReflect };

/// Augmentations to apply per training sample. Geometric ops (crop, rotate,
/// hreflect) run before photometric ops (jitter, cutout) in a fixed canonical
/// order regardless of how the set was written.
using AugmentSet = std::vector<AugmentKind>;

struct AugmentParams {
  double jitter_strength = 0.2;   // factors drawn in [1-s, 1+s]
  int crop_out_h = 0;             // 0 = derive from the margin ratio
  int crop_out_w = 0;
  int cutout_min = 0;             // 0 = derive from image width
  int cutout_max = 0;
  double rotate_max_deg = 5.0;
  double hreflect_prob = 0.5;
};

/// "none", a single name, or names joined with '+': "crop+jitter".
/// Names: jitter, crop, cutout, rotate, hreflect.
AugmentSet parse_augment_set(const std::string& text);
std::string augment_set_name(const AugmentSet& set);

/// Crop margin preserved from the reference resolution (16 px of 240).
int crop_margin(int width);
/// Cutout side range [10, 60] at 224-pixel scale, proportional elsewhere.
std::array<int, 2> cutout_range_for_width(int width);

// Deterministic cores. The seeded wrappers below draw their parameters from
// the seed and delegate here.
LabeledSample jitter_with(LabeledSample s, double brightness, double contrast,
                          double saturation);
LabeledSample crop_at(LabeledSample s, int oy, int ox, int out_h, int out_w);
LabeledSample cutout_at(LabeledSample s, int y0, int x0, int side,
                        std::array<float, 3> rgb);
LabeledSample rotate_by(LabeledSample s, double degrees);

LabeledSample jitter(LabeledSample s, double strength, uint64_t seed);
LabeledSample crop(LabeledSample s, int out_h, int out_w, uint64_t seed);
LabeledSample center_crop(LabeledSample s, int out_h, int out_w);
LabeledSample cutout_color(LabeledSample s, std::array<int, 2> size_range,
                           uint64_t seed);
LabeledSample rotate_small(LabeledSample s, double deg_range, uint64_t seed);
/// Mirrors the image across its vertical axis and reflects the action label:
/// dx.x negated, rotation conjugated by diag(-1,1,1), gripper bit unchanged.
LabeledSample hreflect(LabeledSample s);

/// Applies the set in canonical order with per-op seeds derived from `seed`.
/// When kCrop is absent the image is center-cropped to the same output size,
/// so every sample reaches the policy at identical dimensions. hreflect is
/// applied with probability hreflect_prob.
LabeledSample apply_augments(LabeledSample s, const AugmentSet& set,
                             const AugmentParams& params, uint64_t seed);

}  // namespace demokit::aug
