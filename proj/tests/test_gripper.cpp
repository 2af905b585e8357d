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

#include <sstream>

#include "demokit/error.hpp"
#include "demokit/gripper.hpp"
#include "demokit/rng.hpp"

using namespace demokit;
using namespace demokit::grip;

namespace {

std::vector<FingerDetection> from_distances(const std::vector<double>& dists,
                                            double confidence = 1.0) {
  std::vector<FingerDetection> dets;
  for (size_t i = 0; i < dists.size(); ++i) {
    FingerDetection d;
    d.frame_index = static_cast<int64_t>(i);
    d.left_tip = {0.0, 0.0};
    d.right_tip = {dists[i], 0.0};
    d.confidence = confidence;
    dets.push_back(d);
  }
  return dets;
}

std::vector<GripperState> states_of(const std::vector<GripLabel>& labels) {
  std::vector<GripperState> out;
  for (const auto& l : labels) out.push_back(l.state);
  return out;
}

}  // namespace

TEST_CASE("finger_distance") {
  FingerDetection d;
  d.left_tip = {0, 0};
  d.right_tip = {3, 4};
  CHECK(finger_distance(d) == 5.0);
  d.right_tip = {0, 0};
  CHECK(finger_distance(d) == 0.0);
}

TEST_CASE("label_states forced example") {
  LabelConfig cfg;
  cfg.close_thresh = 20;
  cfg.open_thresh = 35;
  const auto labels = label_states(from_distances({50, 30, 10, 12, 40}), cfg);
  const std::vector<GripperState> expect{
      GripperState::kOpen, GripperState::kOpen, GripperState::kClose,
      GripperState::kClose, GripperState::kOpen};
  CHECK(states_of(labels) == expect);
}

TEST_CASE("label_states all above open threshold") {
  LabelConfig cfg;
  cfg.close_thresh = 5;
  cfg.open_thresh = 10;
  const auto labels = label_states(from_distances({20, 30, 11, 50}), cfg);
  for (const auto& l : labels) CHECK(l.state == GripperState::kOpen);
}

TEST_CASE("initial state is open even inside the band") {
  LabelConfig cfg;
  cfg.close_thresh = 5;
  cfg.open_thresh = 10;
  const auto labels = label_states(from_distances({7, 7, 3, 7}), cfg);
  CHECK(labels[0].state == GripperState::kOpen);
  CHECK(labels[1].state == GripperState::kOpen);
  CHECK(labels[2].state == GripperState::kClose);
  CHECK(labels[3].state == GripperState::kClose);  // band retains close
}

TEST_CASE("low confidence carries the previous state and is flagged") {
  LabelConfig cfg;
  cfg.close_thresh = 5;
  cfg.open_thresh = 10;
  auto dets = from_distances({20, 3, 20, 20});
  dets[2].confidence = 0.2;  // distance says open, but not trusted
  const auto labels = label_states(dets, cfg);
  CHECK(labels[1].state == GripperState::kClose);
  CHECK(labels[2].state == GripperState::kClose);
  CHECK(labels[2].carried);
  CHECK(!labels[1].carried);
  CHECK(labels[3].state == GripperState::kOpen);
}

TEST_CASE("label_states precondition checks") {
  LabelConfig bad;
  bad.close_thresh = 10;
  bad.open_thresh = 5;
  CHECK_THROWS_AS(label_states(from_distances({1}), bad), InvalidArgument);

  auto dets = from_distances({1, 2});
  dets[1].frame_index = 0;  // not strictly increasing
  CHECK_THROWS_AS(label_states(dets, LabelConfig{}), InvalidArgument);
}

TEST_CASE("hysteresis: single band crossing cannot flicker") {
  LabelConfig cfg;
  cfg.close_thresh = 10;
  cfg.open_thresh = 20;
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    // distances drift down through the band exactly once, with noise that
    // stays inside the band during the crossing
    std::vector<double> dists;
    for (int i = 0; i < 10; ++i) dists.push_back(rng.uniform(21, 40));
    for (int i = 0; i < 5; ++i) dists.push_back(rng.uniform(10.5, 19.5));
    for (int i = 0; i < 10; ++i) dists.push_back(rng.uniform(0, 9.5));
    const auto labels = label_states(from_distances(dists), cfg);
    int transitions = 0;
    for (size_t i = 1; i < labels.size(); ++i)
      if (labels[i].state != labels[i - 1].state) ++transitions;
    CHECK(transitions == 1);  // open -> close, never back
  }
}

TEST_CASE("monotone threshold property") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> dists;
    for (int i = 0; i < 30; ++i) dists.push_back(rng.uniform(0, 40));
    LabelConfig lo;
    lo.close_thresh = 8;
    lo.open_thresh = 25;
    LabelConfig hi;
    hi.close_thresh = 16;  // raised close threshold
    hi.open_thresh = 25;
    const auto a = label_states(from_distances(dists), lo);
    const auto b = label_states(from_distances(dists), hi);
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i].state == GripperState::kClose)
        CHECK(b[i].state == GripperState::kClose);
  }
}

TEST_CASE("align_actions shift") {
  using S = GripperState;
  const std::vector<S> in{S::kOpen, S::kOpen, S::kClose};
  CHECK(align_actions(in) == std::vector<S>{S::kOpen, S::kClose});

  const std::vector<S> constant(7, S::kClose);
  CHECK(align_actions(constant) == std::vector<S>(6, S::kClose));

  CHECK_THROWS_AS(align_actions({S::kOpen}), AlignmentError);
  CHECK_THROWS_AS(align_actions({}), AlignmentError);
}

TEST_CASE("align_actions matches index oracle and is invertible") {
  Rng rng(23);
  std::vector<GripperState> states;
  for (int i = 0; i < 64; ++i)
    states.push_back(rng.bernoulli(0.4) ? GripperState::kClose
                                        : GripperState::kOpen);
  const auto actions = align_actions(states);
  REQUIRE(actions.size() == states.size() - 1);
  for (size_t t = 0; t < actions.size(); ++t) CHECK(actions[t] == states[t + 1]);

  // prepend the initial state to invert the shift
  std::vector<GripperState> rebuilt{states.front()};
  rebuilt.insert(rebuilt.end(), actions.begin(), actions.end());
  CHECK(rebuilt == states);
}

TEST_CASE("detections jsonl round trip and validation") {
  std::vector<FingerDetection> dets;
  for (int i = 0; i < 5; ++i) {
    FingerDetection d;
    d.frame_index = i;
    d.left_tip = {10.5 + i, 20.25};
    d.right_tip = {30.0 - i, 21.0};
    d.confidence = 0.9;
    dets.push_back(d);
  }
  const auto file = std::filesystem::temp_directory_path() / "demokit_dets.jsonl";
  write_detections_jsonl(file, dets);
  const auto back = read_detections_jsonl(file);
  REQUIRE(back.size() == dets.size());
  for (size_t i = 0; i < dets.size(); ++i) {
    CHECK(back[i].frame_index == dets[i].frame_index);
    CHECK(back[i].left_tip == dets[i].left_tip);
    CHECK(back[i].right_tip == dets[i].right_tip);
    CHECK(back[i].confidence == dets[i].confidence);
  }
  std::filesystem::remove(file);

  std::istringstream bad("{\"frame_index\":0,\"left\":[0,0],\"right\":[1,1],\"confidence\":1.5}\n");
  CHECK_THROWS_AS(read_detections_jsonl(bad), ParseError);
  std::istringstream garbage("not json\n");
  CHECK_THROWS_AS(read_detections_jsonl(garbage), ParseError);
}
