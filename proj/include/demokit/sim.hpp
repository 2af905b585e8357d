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
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "demokit/dataset.hpp"
#include "demokit/geometry.hpp"
#include "demokit/gripper.hpp"
#include "demokit/image.hpp"
#include "demokit/sfm.hpp"

namespace demokit::sim {

using Vec2 = Eigen::Vector2d;

// Planar tabletop micro-world: a tool tip with two fingers moves over a
// [0,1]^2 table; a camera rides above and behind the tip looking straight
// down. Pushing displaces objects quasi-statically; closing the fingers
// around a small object attaches it to the tool.
struct SimConfig {
  int image_size = 64;
  double focal_px = 40.0;      // pinhole focal length in pixels
  double cam_up = 0.45;        // camera height above the tip
  double cam_back = 0.10;      // camera offset behind the tip
  double max_gap = 0.12;       // finger separation when open
  double finger_dot_r = 0.016; // rendered finger marker radius
  double tool_r = 0.02;        // tool contact radius for pushing
  double max_step = 0.035;     // translation clip per step
  double max_yaw_step = 0.12;  // yaw clip per step (rad)
  double exec_step = 0.03;     // world units per unit of normalized action
  double arena_margin = 0.06;
  double goal_radius_factor = 1.5;   // goal radius = factor * object radius
  double stack_lateral_tol = 0.25;   // fraction of the base object radius
};

enum class Shape { kDisc, kSquare };

struct ObjectState {
  Vec2 xy{0.5, 0.5};
  double base_z = 0.0;
  double radius = 0.05;
  double height = 0.03;
  Shape shape = Shape::kDisc;
  std::array<float, 3> color{0.5f, 0.5f, 0.5f};
  bool carried = false;
  int resting_on = -1;  // -1 = table
};

struct SceneParams {
  std::string scene_id;
  uint64_t scene_seed = 0;
  std::array<float, 3> table_color{0.45f, 0.42f, 0.40f};
  double speckle = 0.04;
  // object templates (sizes, colors, shapes); positions are per-episode
  std::vector<ObjectState> objects;
  std::vector<std::string> object_tags;
};

struct TaskSpec {
  data::Task kind = data::Task::kPush;
  uint64_t scene_seed = 0;
};

struct WorldState {
  Vec2 tip{0.5, 0.2};
  double tip_z = 0.02;
  double yaw = 0.0;
  double gap = 0.12;
  bool close_cmd = false;
  int attached = -1;     // object index carried by the tool
  double attach_dz = 0;  // object base z minus tip z while carried
  std::vector<ObjectState> objects;
  Vec2 goal{0.5, 0.8};
  double goal_radius = 0.08;
  int obj_a = 0;  // manipulated object; stack target object is obj_b
  int obj_b = 1;
  int t = 0;
  // sub-goal flags (monotone)
  bool reached_object = false;
  bool grasped = false;
};

/// Camera-to-world pose implied by the tool configuration.
geom::Pose camera_pose(const WorldState& s, const SimConfig& cfg);

/// World-frame positions of the two finger tips.
std::pair<geom::Vec3, geom::Vec3> finger_tips(const WorldState& s,
                                              const SimConfig& cfg);

/// Pixel projection of a world point (center-of-pixel convention).
Vec2 project(const geom::Pose& cam_to_world, const SimConfig& cfg,
             const geom::Vec3& p);

img::ImageTensor render(const WorldState& s, const SceneParams& scene,
                        const SimConfig& cfg);

/// Policy-facing action: translation in the current camera frame (normalized
/// units), relative rotation, and the commanded gripper bit.
struct Action {
  geom::Vec3 dx{0, 0, 0};
  geom::Mat3 rot = geom::Mat3::Identity();
  grip::GripperState g = grip::GripperState::kOpen;
};

/// Applies a camera-frame action: dx is scaled by exec_step and clipped to
/// max_step; the rotation is projected onto the yaw the camera family
/// supports; quasi-static contact dynamics then resolve. Deterministic.
WorldState step(const WorldState& s, const Action& a, const SimConfig& cfg);

/// Tool-space command used by the scripted experts.
struct ToolCmd {
  Vec2 tip{0, 0};
  double tip_z = 0.02;
  double yaw = 0.0;
  bool close = false;
};

/// Shared kinematics+dynamics core behind step() and the experts.
WorldState apply_tool(const WorldState& s, const ToolCmd& cmd,
                      const SimConfig& cfg);

/// Camera-frame action equivalent to `cmd` from state `s` (the adapter that
/// wraps a scripted expert as a policy).
Action tool_cmd_to_action(const WorldState& s, const ToolCmd& cmd,
                          const SimConfig& cfg);

bool push_success(const WorldState& s);
bool stack_success(const WorldState& s, const SimConfig& cfg);

/// Proportional waypoint controller with ground-truth state access.
class Expert {
 public:
  Expert(data::Task task, const SimConfig& cfg) : task_(task), cfg_(cfg) {}
  /// Next command, or nullopt when the episode is finished.
  std::optional<ToolCmd> next(const WorldState& s);

 private:
  data::Task task_;
  SimConfig cfg_;
  int phase_ = 0;
  int settle_ = 0;
};

SceneParams sample_scene(const TaskSpec& task, uint64_t scene_seed);
/// Initial world for an episode of the scene; throws DegenerateInput when no
/// valid layout is found (caller retries with the next episode seed).
WorldState sample_episode(const TaskSpec& task, const SceneParams& scene,
                          uint64_t episode_seed, const SimConfig& cfg);

struct DemoBundle {
  std::string id;
  TaskSpec task;
  SceneParams scene;
  uint64_t episode_seed = 0;
  double scale_factor = 1.0;  // applied to the emitted SfM translations
  std::vector<img::ImageTensor> frames;
  std::vector<geom::Pose> cam_poses;  // ground truth camera-to-world
  std::vector<grip::FingerDetection> detections;
  std::vector<grip::GripperState> gt_states;
  data::Demonstration gt_labels;  // ground-truth action labels
};

struct DemoGenOptions {
  double detection_noise_px = 0.0;
  double low_conf_prob = 0.0;       // chance of an unreliable detection
  double scale_factor = 0.0;        // 0 = draw log-uniform from [0.2, 5]
  int max_steps = 120;
  int max_attempts = 25;            // episode-seed retries on expert failure
};

/// Runs the scripted expert and records the full bundle. The episode seed is
/// advanced past failed attempts; the seed actually used is returned inside
/// the bundle.
DemoBundle generate_demo(const TaskSpec& task, uint64_t episode_seed,
                         const DemoGenOptions& opts, const SimConfig& cfg,
                         const std::string& id);

/// Writes frames/NNNN.ppm, sfm/{cameras,images,points3D}.txt (translations
/// scaled by scale_factor), grips.jsonl, gt_labels.json, and meta.json.
void write_bundle(const std::filesystem::path& dir, const DemoBundle& bundle,
                  const SimConfig& cfg);

struct CorpusOptions {
  int n_scenes = 25;
  int demos_per_scene = 8;
  uint64_t seed = 0;
  DemoGenOptions gen;
};

/// Generates a scene-major corpus under out_dir/demos/<id>/ and writes
/// out_dir/manifest.json. Returns the manifest.
data::DatasetManifest generate_corpus(const TaskSpec& base_task,
                                      const CorpusOptions& opts,
                                      const SimConfig& cfg,
                                      const std::filesystem::path& out_dir);

struct DisturbanceSpec {
  int at_step = 45;
  double magnitude = 0.1;  // max displacement
  uint64_t seed = 0;
};

struct RolloutResult {
  bool success = false;
  bool reached_object = false;
  bool reached_goal = false;
  bool grasped = false;
  bool stacked = false;
  int steps = 0;
  uint64_t episode_seed = 0;
};

using PolicyFn = std::function<Action(const img::ImageTensor&)>;

struct RolloutOptions {
  int max_steps = 150;
  std::optional<DisturbanceSpec> disturbance;
};

RolloutResult rollout(const PolicyFn& policy, const TaskSpec& task,
                      uint64_t episode_seed, const SimConfig& cfg,
                      const RolloutOptions& opts);

/// The expert driven through the policy interface (camera-frame actions).
RolloutResult rollout_expert_as_policy(const TaskSpec& task,
                                       uint64_t episode_seed,
                                       const SimConfig& cfg, int max_steps = 150);

}  // namespace demokit::sim
