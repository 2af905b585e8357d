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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace demokit::grip {

struct FingerDetection {
  int64_t frame_index = 0;
  Eigen::Vector2d left_tip{0, 0};
  Eigen::Vector2d right_tip{0, 0};
  double confidence = 1.0;
};

enum class GripperState : uint8_t { kOpen = 0, kClose = 1 };

double finger_distance(const FingerDetection& d);

struct LabelConfig {
  // Hysteresis band; collapse to a single threshold by setting them equal.
  // Defaults assume 64 px frames: close at 8% of width.
  double close_thresh = 5.12;
  double open_thresh = 8.0;
  double min_confidence = 0.5;

  static LabelConfig for_image_width(int width_px);
};

struct GripLabel {
  GripperState state = GripperState::kOpen;
  bool carried = false;  // detection confidence too low; previous state kept
};

/// Distance thresholding with hysteresis. State starts open, switches to
/// close below close_thresh, back to open above open_thresh, and is retained
/// inside the band. Low-confidence frames keep the previous state and are
/// flagged. Detections must be ordered by frame_index.
std::vector<GripLabel> label_states(const std::vector<FingerDetection>& dets,
                                    const LabelConfig& cfg);

/// The action at step t is the state at t+1: output[t] = states[t+1].
/// Throws AlignmentError when fewer than 2 states are given.
std::vector<GripperState> align_actions(const std::vector<GripperState>& states);

/// Detection file: one JSON object per line,
/// {"frame_index": n, "left": [x, y], "right": [x, y], "confidence": c}.
std::vector<FingerDetection> read_detections_jsonl(std::istream& in);
std::vector<FingerDetection> read_detections_jsonl(
    const std::filesystem::path& file);
void write_detections_jsonl(const std::filesystem::path& file,
                            const std::vector<FingerDetection>& dets);

}  // namespace demokit::grip
