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

#include "demokit/gripper.hpp"

#include <fstream>
#include <istream>

#include "demokit/error.hpp"
#include "demokit/jsonio.hpp"

namespace demokit::grip {

double finger_distance(const FingerDetection& d) {
  return (d.left_tip - d.right_tip).norm();
}

LabelConfig LabelConfig::for_image_width(int width_px) {
  LabelConfig cfg;
  cfg.close_thresh = 0.08 * width_px;
  cfg.open_thresh = 0.125 * width_px;
  return cfg;
}

std::vector<GripLabel> label_states(const std::vector<FingerDetection>& dets,
                                    const LabelConfig& cfg) {
  if (!(cfg.open_thresh >= cfg.close_thresh && cfg.close_thresh > 0))
    throw InvalidArgument("label_states: need open_thresh >= close_thresh > 0");
  for (size_t i = 1; i < dets.size(); ++i)
    if (dets[i].frame_index <= dets[i - 1].frame_index)
      throw InvalidArgument("label_states: detections not ordered by frame");

  std::vector<GripLabel> out;
  out.reserve(dets.size());
  GripperState state = GripperState::kOpen;
  for (const FingerDetection& d : dets) {
    GripLabel label;
    if (d.confidence < cfg.min_confidence) {
      label.carried = true;  // keep previous state
    } else {
      const double dist = finger_distance(d);
      if (dist < cfg.close_thresh)
        state = GripperState::kClose;
      else if (dist > cfg.open_thresh)
        state = GripperState::kOpen;
      // inside the band: state retained
    }
    label.state = state;
    out.push_back(label);
  }
  return out;
}

std::vector<GripperState> align_actions(
    const std::vector<GripperState>& states) {
  if (states.size() < 2)
    throw AlignmentError("align_actions: need at least 2 states");
  return std::vector<GripperState>(states.begin() + 1, states.end());
}

std::vector<FingerDetection> read_detections_jsonl(std::istream& in) {
  std::vector<FingerDetection> dets;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), lineno);
    }
    FingerDetection d;
    try {
      d.frame_index = j.at("frame_index").get<int64_t>();
      d.left_tip = {j.at("left").at(0).get<double>(),
                    j.at("left").at(1).get<double>()};
      d.right_tip = {j.at("right").at(0).get<double>(),
                     j.at("right").at(1).get<double>()};
      d.confidence = j.at("confidence").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    if (d.confidence < 0.0 || d.confidence > 1.0)
      throw ParseError("confidence outside [0, 1]", lineno);
    dets.push_back(d);
  }
  return dets;
}

std::vector<FingerDetection> read_detections_jsonl(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  return read_detections_jsonl(in);
}

void write_detections_jsonl(const std::filesystem::path& file,
                            const std::vector<FingerDetection>& dets) {
  std::string out;
  for (const FingerDetection& d : dets) {
    const Json j = {{"frame_index", d.frame_index},
                    {"left", {d.left_tip.x(), d.left_tip.y()}},
                    {"right", {d.right_tip.x(), d.right_tip.y()}},
                    {"confidence", d.confidence}};
    out += j.dump();
    out += '\n';
  }
  write_text_file(file, out);
}

}  // namespace demokit::grip
