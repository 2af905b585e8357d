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

#include "demokit/dataset.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "demokit/error.hpp"
#include "demokit/jsonio.hpp"
#include "demokit/rng.hpp"

namespace demokit::data {

namespace {

// Round to `digits` significant decimal digits. Keeps serialized labels
// stable against sub-ulp noise introduced by the arbitrary SfM scale.
double quantize_sig(double v, int digits = 12) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

std::vector<std::string> scene_order(const std::vector<DemoDescriptor>& pool) {
  std::vector<std::string> scenes;
  std::set<std::string> seen;
  for (const auto& d : pool)
    if (seen.insert(d.scene_id).second) scenes.push_back(d.scene_id);
  return scenes;
}

}  // namespace

std::string task_name(Task t) { return t == Task::kPush ? "push" : "stack"; }

Task task_from_name(const std::string& name) {
  if (name == "push") return Task::kPush;
  if (name == "stack") return Task::kStack;
  throw InvalidArgument("unknown task '" + name + "'");
}

Demonstration assemble(const sfm::FramePoseSeq& seq,
                       const std::vector<grip::GripperState>& grips,
                       const std::vector<std::string>& frames,
                       const DemoMeta& meta, geom::NormStat stat) {
  const size_t n = seq.frames.size();
  if (grips.size() != n || frames.size() != n)
    throw AlignmentError("assemble: poses/grips/frames length mismatch (" +
                         std::to_string(n) + "/" + std::to_string(grips.size()) +
                         "/" + std::to_string(frames.size()) + ")");
  if (n < 2) throw AlignmentError("assemble: need at least 2 frames");

  std::vector<geom::ActionDelta> deltas(n - 1);
  for (size_t i = 0; i + 1 < n; ++i)
    deltas[i] =
        geom::relative_pose(seq.frames[i].cam_to_world, seq.frames[i + 1].cam_to_world);
  deltas = geom::normalize_trajectory(std::move(deltas), stat);
  const std::vector<grip::GripperState> actions = grip::align_actions(grips);

  Demonstration demo;
  demo.trajectory_id = seq.trajectory_id;
  demo.scene_id = meta.scene_id;
  demo.object_tags = meta.object_tags;
  demo.task = meta.task;
  demo.samples.resize(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    Sample& s = demo.samples[i];
    s.frame = frames[i];
    for (int k = 0; k < 3; ++k) s.label.dx[k] = quantize_sig(deltas[i].dx[k]);
    const geom::Rot6d w = geom::rotmat_to_6d(deltas[i].rot);
    for (int k = 0; k < 6; ++k) s.label.w.v[k] = quantize_sig(w.v[k]);
    s.label.g = actions[i];
  }
  return demo;
}

void write_labels_json(const std::filesystem::path& file,
                       const Demonstration& demo) {
  Json samples = Json::array();
  for (const Sample& s : demo.samples) {
    samples.push_back(
        {{"frame", s.frame},
         {"dx", {s.label.dx.x(), s.label.dx.y(), s.label.dx.z()}},
         {"rot6", s.label.w.v},
         {"grip", static_cast<int>(s.label.g)}});
  }
  const Json j = {{"schema_version", 1},
                  {"trajectory_id", demo.trajectory_id},
                  {"scene_id", demo.scene_id},
                  {"object_tags", demo.object_tags},
                  {"task", task_name(demo.task)},
                  {"samples", samples}};
  write_json_file(file, j);
}

Demonstration read_labels_json(const std::filesystem::path& file) {
  const Json j = read_json_file(file);
  Demonstration demo;
  demo.trajectory_id = j.at("trajectory_id").get<std::string>();
  demo.scene_id = j.at("scene_id").get<std::string>();
  demo.object_tags = j.at("object_tags").get<std::vector<std::string>>();
  demo.task = task_from_name(j.at("task").get<std::string>());
  for (const Json& js : j.at("samples")) {
    Sample s;
    s.frame = js.at("frame").get<std::string>();
    for (int k = 0; k < 3; ++k) s.label.dx[k] = js.at("dx").at(k).get<double>();
    for (int k = 0; k < 6; ++k)
      s.label.w.v[k] = js.at("rot6").at(k).get<double>();
    s.label.g = js.at("grip").get<int>() != 0 ? grip::GripperState::kClose
                                              : grip::GripperState::kOpen;
    demo.samples.push_back(std::move(s));
  }
  return demo;
}

void DatasetManifest::add(DemoDescriptor d) {
  if (find(d.id) != nullptr)
    throw InvalidArgument("duplicate demonstration id '" + d.id + "'");
  demos.push_back(std::move(d));
}

const DemoDescriptor* DatasetManifest::find(const std::string& id) const {
  for (const auto& d : demos)
    if (d.id == id) return &d;
  return nullptr;
}

std::vector<DemoDescriptor> DatasetManifest::collection_order() const {
  std::vector<DemoDescriptor> out = demos;
  std::stable_sort(out.begin(), out.end(),
                   [](const DemoDescriptor& a, const DemoDescriptor& b) {
                     return a.collection_index < b.collection_index;
                   });
  return out;
}

std::vector<DemoDescriptor> DatasetManifest::subset(
    const std::vector<std::string>& ids) const {
  std::set<std::string> want(ids.begin(), ids.end());
  std::vector<DemoDescriptor> out;
  for (const auto& d : collection_order())
    if (want.count(d.id) != 0) {
      out.push_back(d);
      want.erase(d.id);
    }
  if (!want.empty())
    throw InvalidArgument("subset: unknown demonstration id '" + *want.begin() +
                          "'");
  return out;
}

void write_manifest(const std::filesystem::path& file,
                    const DatasetManifest& m) {
  Json demos = Json::array();
  for (const auto& d : m.demos)
    demos.push_back({{"id", d.id},
                     {"scene_id", d.scene_id},
                     {"object_tags", d.object_tags},
                     {"task", task_name(d.task)},
                     {"path", d.path},
                     {"collection_index", d.collection_index}});
  Json splits = Json::object();
  for (const auto& [name, s] : m.splits)
    splits[name] = {{"strategy", s.strategy}, {"fraction", s.fraction},
                    {"quota", s.quota},       {"seed", s.seed},
                    {"train", s.train},       {"test", s.test}};
  write_json_file(file, {{"schema_version", DatasetManifest::kSchemaVersion},
                         {"demos", demos},
                         {"splits", splits}});
}

DatasetManifest read_manifest(const std::filesystem::path& file) {
  const Json j = read_json_file(file);
  if (j.at("schema_version").get<int>() != DatasetManifest::kSchemaVersion)
    throw ParseError(file.string() + ": unsupported manifest schema version");
  DatasetManifest m;
  for (const Json& jd : j.at("demos")) {
    DemoDescriptor d;
    d.id = jd.at("id").get<std::string>();
    d.scene_id = jd.at("scene_id").get<std::string>();
    d.object_tags = jd.at("object_tags").get<std::vector<std::string>>();
    d.task = task_from_name(jd.at("task").get<std::string>());
    d.path = jd.at("path").get<std::string>();
    d.collection_index = jd.at("collection_index").get<int>();
    m.add(std::move(d));
  }
  if (j.contains("splits"))
    for (const auto& [name, js] : j.at("splits").items()) {
      SplitAssignment s;
      s.strategy = js.at("strategy").get<std::string>();
      s.fraction = js.at("fraction").get<double>();
      s.quota = js.at("quota").get<int>();
      s.seed = js.at("seed").get<uint64_t>();
      s.train = js.at("train").get<std::vector<std::string>>();
      s.test = js.at("test").get<std::vector<std::string>>();
      m.splits[name] = std::move(s);
    }
  return m;
}

ManifestLock::ManifestLock(const std::filesystem::path& manifest_file)
    : lock_file_(manifest_file.string() + ".lock") {
  const int fd = ::open(lock_file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw IoError("manifest is locked (remove stale " + lock_file_.string() +
                  " if no writer is active)");
  ::close(fd);
}

ManifestLock::~ManifestLock() {
  std::error_code ec;
  std::filesystem::remove(lock_file_, ec);
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_fraction(
    const std::vector<DemoDescriptor>& pool, const SplitSpec& spec) {
  if (pool.empty()) throw InvalidArgument("split_fraction: empty pool");
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0))
    throw InvalidArgument("split_fraction: fraction must be in (0, 1]");
  const size_t n = pool.size();
  const size_t k = std::min(
      n, static_cast<size_t>(std::ceil(spec.fraction * static_cast<double>(n))));

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  if (spec.strategy == SplitStrategy::kRandom) {
    Rng rng(mix_seed({spec.seed, 0x5b711d9cull}));
    rng.shuffle(order);
  } else if (spec.strategy != SplitStrategy::kSequential) {
    throw InvalidArgument("split_fraction: strategy must be sequential or random");
  }

  std::vector<bool> taken(n, false);
  for (size_t i = 0; i < k; ++i) taken[order[i]] = true;
  std::vector<std::string> train, rest;
  for (size_t i = 0; i < n; ++i)
    (taken[i] ? train : rest).push_back(pool[i].id);
  return {std::move(train), std::move(rest)};
}

std::vector<std::string> split_diversity(const std::vector<DemoDescriptor>& pool,
                                         int quota, SplitStrategy mode) {
  if (quota < 0 || static_cast<size_t>(quota) > pool.size())
    throw InvalidArgument("split_diversity: quota exceeds pool size");
  std::vector<std::string> out;
  if (mode == SplitStrategy::kDiversityA) {
    // densest: whole scenes, in collection order, until the quota is met
    for (const std::string& scene : scene_order(pool)) {
      for (const auto& d : pool) {
        if (d.scene_id != scene) continue;
        if (out.size() == static_cast<size_t>(quota)) return out;
        out.push_back(d.id);
      }
    }
    return out;
  }
  if (mode == SplitStrategy::kDiversityB) {
    const std::vector<std::string> scenes = scene_order(pool);
    std::vector<size_t> cursor(scenes.size(), 0);
    std::vector<std::vector<const DemoDescriptor*>> by_scene(scenes.size());
    for (const auto& d : pool)
      for (size_t s = 0; s < scenes.size(); ++s)
        if (scenes[s] == d.scene_id) by_scene[s].push_back(&d);
    while (out.size() < static_cast<size_t>(quota)) {
      bool advanced = false;
      for (size_t s = 0;
           s < scenes.size() && out.size() < static_cast<size_t>(quota); ++s) {
        if (cursor[s] < by_scene[s].size()) {
          out.push_back(by_scene[s][cursor[s]++]->id);
          advanced = true;
        }
      }
      if (!advanced) break;
    }
    return out;
  }
  throw InvalidArgument("split_diversity: mode must be diversity_A or diversity_B");
}

std::pair<std::vector<std::string>, std::vector<std::string>> scene_holdout(
    const std::vector<DemoDescriptor>& pool, double holdout_fraction,
    uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw InvalidArgument("scene_holdout: fraction must be in (0, 1)");
  const std::vector<std::string> scenes = scene_order(pool);
  if (scenes.size() < 2)
    throw InvalidArgument("scene_holdout: need at least 2 scenes");

  const size_t n_test = std::clamp<size_t>(
      static_cast<size_t>(std::llround(holdout_fraction *
                                       static_cast<double>(scenes.size()))),
      1, scenes.size() - 1);
  std::vector<size_t> order(scenes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed({seed, 0x9c8e21aaull}));
  rng.shuffle(order);
  std::set<std::string> test_scenes;
  for (size_t i = 0; i < n_test; ++i) test_scenes.insert(scenes[order[i]]);

  std::vector<std::string> train, test;
  for (const auto& d : pool)
    (test_scenes.count(d.scene_id) != 0 ? test : train).push_back(d.id);
  return {std::move(train), std::move(test)};
}

}  // namespace demokit::data
