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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "demokit/geometry.hpp"

namespace demokit::sfm {

// Text-model ingestion for the SfM reconstructions the pipeline consumes.
// images.txt grammar: '#'-prefixed comments anywhere; two lines per image,
//   "IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME"
// followed by one line of 2D point observations (possibly empty), which is
// discarded. The stored (q, t) is world-to-camera.

struct SfmImageRecord {
  int64_t image_id = 0;
  geom::Quat q;     // world-to-camera
  geom::Vec3 t{0, 0, 0};  // world-to-camera
  int64_t camera_id = 0;
  std::string name;

  bool operator==(const SfmImageRecord& o) const {
    return image_id == o.image_id && q == o.q && t == o.t &&
           camera_id == o.camera_id && name == o.name;
  }
};

struct SfmCameraRecord {
  int64_t camera_id = 0;
  std::string model_name;
  int width = 0, height = 0;
  std::vector<double> params;

  bool operator==(const SfmCameraRecord&) const = default;
};

std::vector<SfmImageRecord> parse_images_text(std::istream& in);
std::vector<SfmCameraRecord> parse_cameras_text(std::istream& in);

/// Canonical serialization: no comments, fields separated by single spaces,
/// doubles at full round-trip precision, an empty points line per image.
/// parse(serialize(records)) == records, and serialize(parse(text)) == text
/// for canonical-form text.
std::string serialize_images_text(const std::vector<SfmImageRecord>& records);
std::string serialize_cameras_text(const std::vector<SfmCameraRecord>& records);

struct FramePose {
  int64_t frame_index = 0;
  geom::Pose cam_to_world;
  std::string name;
};

struct FramePoseSeq {
  std::string trajectory_id;
  std::vector<FramePose> frames;  // strictly increasing frame_index
};

/// Natural-order comparison: digit runs compare numerically, other runs
/// lexicographically. "frame_9.ppm" < "frame_10.ppm".
bool natural_less(const std::string& a, const std::string& b);

/// Inverts world-to-camera records into camera-to-world poses, ordered by
/// natural sort of image name. frame_index is the trailing number embedded in
/// the name when every name has one (and they are strictly increasing in sort
/// order); otherwise positional. Throws on duplicate names.
FramePoseSeq to_camera_poses(const std::vector<SfmImageRecord>& records,
                             const std::string& trajectory_id);

struct QcConfig {
  double max_missing_fraction = 0.1;
  double step_outlier_factor = 20.0;  // vs median step norm
  int min_frames = 8;
};

struct QcReport {
  bool kept = true;
  std::vector<std::string> reasons;  // rule ids: missing-frames, step-outlier, too-few-frames
  double missing_fraction = 0.0;
  double max_step_ratio = 0.0;   // max step norm / median step norm
  double max_step_zscore = 0.0;  // (max step norm - mean) / stddev
};

QcReport qc_filter(const FramePoseSeq& seq, const QcConfig& rules = {});

/// Reads {cameras.txt, images.txt} from an SfM model directory (points3D.txt
/// is ignored) and returns the ordered camera-to-world sequence.
FramePoseSeq load_model_dir(const std::filesystem::path& dir,
                            const std::string& trajectory_id);

/// Trajectory pose file (poses.json): one JSON document per demonstration
/// with camera-to-world quaternion+translation per frame and the QC report.
void write_poses_json(const std::filesystem::path& file, const FramePoseSeq& seq,
                      const QcReport& qc);
FramePoseSeq read_poses_json(const std::filesystem::path& file,
                             QcReport* qc_out = nullptr);

}  // namespace demokit::sfm
