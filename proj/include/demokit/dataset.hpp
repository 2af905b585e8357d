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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "demokit/geometry.hpp"
#include "demokit/gripper.hpp"
#include "demokit/sfm.hpp"

namespace demokit::data {

enum class Task { kPush, kStack };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

/// Supervised target for one step: translation in normalized trajectory
/// units, rotation as 6D, and the gripper bit for the next timestep.
struct ActionLabel {
  geom::Vec3 dx{0, 0, 0};
  geom::Rot6d w;
  grip::GripperState g = grip::GripperState::kOpen;
};

struct Sample {
  std::string frame;  // frame file name relative to the demo directory
  ActionLabel label;
};

struct Demonstration {
  std::string trajectory_id;
  std::string scene_id;
  std::vector<std::string> object_tags;
  Task task = Task::kPush;
  std::vector<Sample> samples;  // frame count - 1 entries
};

struct DemoMeta {
  std::string scene_id;
  std::vector<std::string> object_tags;
  Task task = Task::kPush;
};

/// Zips poses, gripper states, and frame references into a demonstration:
/// relative pose deltas normalized across the trajectory, gripper actions
/// shifted to the next timestep. All three inputs must have equal length.
/// Label components are rounded to 12 significant decimal digits so that
/// trajectories differing only by the arbitrary SfM scale factor produce
/// bit-identical labels.
Demonstration assemble(const sfm::FramePoseSeq& seq,
                       const std::vector<grip::GripperState>& grips,
                       const std::vector<std::string>& frames,
                       const DemoMeta& meta,
                       geom::NormStat stat = geom::NormStat::kMean);

void write_labels_json(const std::filesystem::path& file,
                       const Demonstration& demo);
Demonstration read_labels_json(const std::filesystem::path& file);

struct DemoDescriptor {
  std::string id;
  std::string scene_id;
  std::vector<std::string> object_tags;
  Task task = Task::kPush;
  std::string path;  // demo directory, relative to the manifest directory
  int collection_index = 0;
};

struct SplitAssignment {
  std::string strategy;
  double fraction = 1.0;
  int quota = 0;
  uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct DatasetManifest {
  static constexpr int kSchemaVersion = 1;
  std::vector<DemoDescriptor> demos;
  std::map<std::string, SplitAssignment> splits;

  void add(DemoDescriptor d);  // throws on duplicate id
  const DemoDescriptor* find(const std::string& id) const;
  /// Demos sorted by collection_index.
  std::vector<DemoDescriptor> collection_order() const;
  /// Subset in collection order; throws on unknown id.
  std::vector<DemoDescriptor> subset(const std::vector<std::string>& ids) const;
};

void write_manifest(const std::filesystem::path& file,
                    const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& file);

/// Exclusive advisory lock guarding manifest mutation; created O_EXCL and
/// removed on destruction.
class ManifestLock {
 public:
  explicit ManifestLock(const std::filesystem::path& manifest_file);
  ~ManifestLock();
  ManifestLock(const ManifestLock&) = delete;
  ManifestLock& operator=(const ManifestLock&) = delete;

 private:
  std::filesystem::path lock_file_;
};

enum class SplitStrategy { kSequential, kRandom, kDiversityA, kDiversityB, kSceneHoldout };

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::kSequential;
  double fraction = 1.0;  // (0, 1] for sequential/random/scene_holdout
  int quota = 0;          // diversity modes
  uint64_t seed = 0;
};

/// Fractions studied by the data-size experiments.
inline constexpr double kFractionPresets[] = {0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.0};

/// Sequential: first ceil(fraction*N) demos by collection order.
/// Random: seeded uniform sample without replacement, returned in collection
/// order. Second element is the complement.
std::pair<std::vector<std::string>, std::vector<std::string>> split_fraction(
    const std::vector<DemoDescriptor>& pool, const SplitSpec& spec);

/// Mode A fills the quota from the fewest distinct scenes (contiguous in
/// collection order); mode B takes one demo per scene round-robin.
std::vector<std::string> split_diversity(const std::vector<DemoDescriptor>& pool,
                                         int quota, SplitStrategy mode);

/// Whole scenes go to the test side; train/test scene sets are disjoint and
/// jointly exhaustive. Needs at least 2 scenes.
std::pair<std::vector<std::string>, std::vector<std::string>> scene_holdout(
    const std::vector<DemoDescriptor>& pool, double holdout_fraction,
    uint64_t seed);

}  // namespace demokit::data
