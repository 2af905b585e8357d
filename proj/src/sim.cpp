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

#include "demokit/sim.hpp"

#include <algorithm>
#include <cmath>

#include "demokit/error.hpp"
#include "demokit/jsonio.hpp"
#include "demokit/rng.hpp"

namespace demokit::sim {

namespace {

constexpr double kPushZ = 0.02;
constexpr double kHoverZ = 0.16;
constexpr double kLiftZ = 0.15;
constexpr double kMinZ = 0.012;
constexpr double kMaxZ = 0.35;

double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a < -M_PI) a += 2 * M_PI;
  return a;
}

Vec2 facing(double yaw) { return {-std::sin(yaw), std::cos(yaw)}; }
Vec2 lateral(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

// forward direction d -> yaw with facing(yaw) == normalize(d)
double yaw_of_dir(const Vec2& d) { return std::atan2(-d.x(), d.y()); }

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

std::array<float, 3> hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  double r = 0, g = 0, b = 0;
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

bool inside_object(const ObjectState& o, const Vec2& wp) {
  const Vec2 d = wp - o.xy;
  if (o.shape == Shape::kDisc) return d.norm() <= o.radius;
  return std::abs(d.x()) <= o.radius && std::abs(d.y()) <= o.radius;
}

}  // namespace

geom::Pose camera_pose(const WorldState& s, const SimConfig& cfg) {
  geom::Pose p;
  const Vec2 x = lateral(s.yaw);
  const Vec2 f = facing(s.yaw);
  p.R.col(0) = geom::Vec3(x.x(), x.y(), 0);
  p.R.col(1) = geom::Vec3(-f.x(), -f.y(), 0);  // image down = -forward
  p.R.col(2) = geom::Vec3(0, 0, -1);           // looking at the table
  const Vec2 c = s.tip - cfg.cam_back * f;
  p.t = geom::Vec3(c.x(), c.y(), s.tip_z + cfg.cam_up);
  return p;
}

std::pair<geom::Vec3, geom::Vec3> finger_tips(const WorldState& s,
                                              const SimConfig& cfg) {
  (void)cfg;
  const Vec2 lat = lateral(s.yaw);
  const Vec2 l = s.tip - 0.5 * s.gap * lat;
  const Vec2 r = s.tip + 0.5 * s.gap * lat;
  return {geom::Vec3(l.x(), l.y(), s.tip_z), geom::Vec3(r.x(), r.y(), s.tip_z)};
}

Vec2 project(const geom::Pose& cam_to_world, const SimConfig& cfg,
             const geom::Vec3& p) {
  const geom::Vec3 pc = cam_to_world.R.transpose() * (p - cam_to_world.t);
  if (pc.z() <= 1e-9) throw InvalidArgument("project: point behind camera");
  const double c = cfg.image_size / 2.0;
  return {c + cfg.focal_px * pc.x() / pc.z(),
          c + cfg.focal_px * pc.y() / pc.z()};
}

img::ImageTensor render(const WorldState& s, const SceneParams& scene,
                        const SimConfig& cfg) {
  const int n = cfg.image_size;
  img::ImageTensor im(n, n);
  const geom::Pose cam = camera_pose(s, cfg);
  const double c = n / 2.0;
  const auto [fl, fr] = finger_tips(s, cfg);

  // depth-sorted plane indices are implicit: we keep the hit with max z
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const geom::Vec3 dir_cam((ix + 0.5 - c) / cfg.focal_px,
                               (iy + 0.5 - c) / cfg.focal_px, 1.0);
      const geom::Vec3 dir = cam.R * dir_cam;
      // ray: cam.t + t * dir; intersect plane z = zp
      const auto at_plane = [&](double zp) -> Vec2 {
        const double t = (zp - cam.t.z()) / dir.z();
        return {cam.t.x() + t * dir.x(), cam.t.y() + t * dir.y()};
      };

      std::array<float, 3> color;
      double best_z = -1.0;

      {  // table with procedural speckle; outside the arena darkened
        const Vec2 wp = at_plane(0.0);
        color = scene.table_color;
        const int64_t cx = static_cast<int64_t>(std::floor(wp.x() / 0.03));
        const int64_t cy = static_cast<int64_t>(std::floor(wp.y() / 0.03));
        const uint64_t h = splitmix64(static_cast<uint64_t>(cx) * 73856093ull ^
                                      static_cast<uint64_t>(cy) * 19349663ull ^
                                      scene.scene_seed);
        const float jitter = static_cast<float>(
            ((h >> 16) % 2048 / 1024.0 - 1.0) * scene.speckle);
        for (float& v : color) v = std::clamp(v + jitter, 0.0f, 1.0f);
        if (wp.x() < 0 || wp.x() > 1 || wp.y() < 0 || wp.y() > 1)
          for (float& v : color) v *= 0.55f;
        best_z = 0.0;
      }

      if (s.goal_radius > 0) {
        const Vec2 wp = at_plane(1e-4);
        if ((wp - s.goal).norm() <= s.goal_radius) {
          color = {0.85f, 0.08f, 0.08f};
          best_z = 1e-4;
        }
      }

      for (const ObjectState& o : s.objects) {
        const double top = o.base_z + o.height;
        if (top <= best_z || top >= cam.t.z()) continue;
        const Vec2 wp = at_plane(top);
        if (inside_object(o, wp)) {
          color = o.color;
          best_z = top;
        }
      }

      {  // finger markers, drawn above everything at their height
        const double zf = s.tip_z + 1e-3;
        if (zf > best_z && zf < cam.t.z()) {
          const Vec2 wp = at_plane(zf);
          const double d = std::min((wp - Vec2(fl.x(), fl.y())).norm(),
                                    (wp - Vec2(fr.x(), fr.y())).norm());
          if (d <= cfg.finger_dot_r) color = {0.96f, 0.93f, 0.88f};
        }
      }

      for (int ch = 0; ch < 3; ++ch) im.at(ch, iy, ix) = color[ch];
    }
  }
  return im;
}

WorldState apply_tool(const WorldState& s, const ToolCmd& cmd,
                      const SimConfig& cfg) {
  WorldState n = s;

  // kinematics with actuator limits
  Vec2 d = cmd.tip - s.tip;
  double dz = cmd.tip_z - s.tip_z;
  const double norm3 = std::sqrt(d.squaredNorm() + dz * dz);
  if (norm3 > cfg.max_step) {
    const double k = cfg.max_step / norm3;
    d *= k;
    dz *= k;
  }
  n.tip = s.tip + d;
  n.tip_z = std::clamp(s.tip_z + dz, kMinZ, kMaxZ);
  n.tip.x() = std::clamp(n.tip.x(), cfg.arena_margin, 1.0 - cfg.arena_margin);
  n.tip.y() = std::clamp(n.tip.y(), cfg.arena_margin, 1.0 - cfg.arena_margin);
  const double dyaw =
      std::clamp(wrap_angle(cmd.yaw - s.yaw), -cfg.max_yaw_step, cfg.max_yaw_step);
  n.yaw = wrap_angle(s.yaw + dyaw);

  // gripper transitions
  if (cmd.close && !s.close_cmd) {
    n.close_cmd = true;
    n.attached = -1;
    for (size_t i = 0; i < n.objects.size(); ++i) {
      ObjectState& o = n.objects[i];
      if (o.carried) continue;
      if (2.0 * o.radius > 0.9 * cfg.max_gap) continue;  // too wide to hold
      const bool straddled = (o.xy - n.tip).norm() < 0.9 * o.radius;
      const bool in_window = n.tip_z < o.base_z + o.height + 0.01 &&
                             n.tip_z > o.base_z - 0.005;
      if (straddled && in_window) {
        n.attached = static_cast<int>(i);
        n.attach_dz = o.base_z - n.tip_z;
        o.carried = true;
        o.resting_on = -1;
        n.grasped = true;
        break;
      }
    }
    n.gap = n.attached >= 0 ? 2.0 * n.objects[n.attached].radius : 0.015;
  } else if (!cmd.close && s.close_cmd) {
    n.close_cmd = false;
    n.gap = cfg.max_gap;
    if (n.attached >= 0) {
      ObjectState& o = n.objects[n.attached];
      o.carried = false;
      // settle on the highest support under the drop point
      double top = 0.0;
      int support = -1;
      for (size_t j = 0; j < n.objects.size(); ++j) {
        if (static_cast<int>(j) == n.attached) continue;
        const ObjectState& b = n.objects[j];
        if (b.carried) continue;
        if ((o.xy - b.xy).norm() < b.radius && b.base_z + b.height > top) {
          top = b.base_z + b.height;
          support = static_cast<int>(j);
        }
      }
      o.base_z = top;
      o.resting_on = support;
      n.attached = -1;
    }
  }

  // carried object follows the tool
  if (n.attached >= 0) {
    ObjectState& o = n.objects[n.attached];
    o.xy = n.tip;
    o.base_z = n.tip_z + n.attach_dz;
  }

  // quasi-static pushing: the tool displaces grounded objects it overlaps
  for (ObjectState& o : n.objects) {
    if (o.carried) continue;
    if (n.tip_z >= o.base_z + o.height) continue;  // tool above the object
    const double rc = o.radius + cfg.tool_r;
    const Vec2 dd = o.xy - n.tip;
    const double dist = dd.norm();
    if (dist < rc) {
      const Vec2 normal = dist > 1e-9 ? Vec2(dd / dist) : Vec2(d.normalized());
      o.xy = n.tip + normal * rc;
      o.xy.x() = std::clamp(o.xy.x(), cfg.arena_margin, 1.0 - cfg.arena_margin);
      o.xy.y() = std::clamp(o.xy.y(), cfg.arena_margin, 1.0 - cfg.arena_margin);
    }
  }

  if ((n.objects[n.obj_a].xy - n.tip).norm() <
      n.objects[n.obj_a].radius + cfg.tool_r + 0.01)
    n.reached_object = true;

  ++n.t;
  return n;
}

WorldState step(const WorldState& s, const Action& a, const SimConfig& cfg) {
  if (!a.dx.allFinite() || !a.rot.allFinite())
    throw InvalidArgument("step: non-finite action");
  const geom::Pose cam = camera_pose(s, cfg);

  geom::Vec3 move = cam.R * (a.dx * cfg.exec_step);
  // the camera travels slightly farther than the tip when yawing
  const double cam_clip = cfg.max_step + cfg.cam_back * cfg.max_yaw_step;
  if (move.norm() > cam_clip) move *= cam_clip / move.norm();
  const geom::Vec3 cam_t = cam.t + move;

  const geom::Mat3 r = cam.R * a.rot;
  const double yaw = std::atan2(r(1, 0), r(0, 0));

  ToolCmd cmd;
  const Vec2 f = facing(yaw);
  cmd.tip = Vec2(cam_t.x(), cam_t.y()) + cfg.cam_back * f;
  cmd.tip_z = cam_t.z() - cfg.cam_up;
  cmd.yaw = yaw;
  cmd.close = a.g == grip::GripperState::kClose;
  return apply_tool(s, cmd, cfg);
}

Action tool_cmd_to_action(const WorldState& s, const ToolCmd& cmd,
                          const SimConfig& cfg) {
  const geom::Pose before = camera_pose(s, cfg);
  WorldState kin = s;  // kinematics only, mirroring apply_tool's clamps
  Vec2 d = cmd.tip - s.tip;
  double dz = cmd.tip_z - s.tip_z;
  const double norm3 = std::sqrt(d.squaredNorm() + dz * dz);
  if (norm3 > cfg.max_step) {
    const double k = cfg.max_step / norm3;
    d *= k;
    dz *= k;
  }
  kin.tip = s.tip + d;
  kin.tip_z = std::clamp(s.tip_z + dz, kMinZ, kMaxZ);
  kin.tip.x() = std::clamp(kin.tip.x(), cfg.arena_margin, 1.0 - cfg.arena_margin);
  kin.tip.y() = std::clamp(kin.tip.y(), cfg.arena_margin, 1.0 - cfg.arena_margin);
  const double dyaw =
      std::clamp(wrap_angle(cmd.yaw - s.yaw), -cfg.max_yaw_step, cfg.max_yaw_step);
  kin.yaw = wrap_angle(s.yaw + dyaw);

  const geom::Pose after = camera_pose(kin, cfg);
  const geom::ActionDelta delta = geom::relative_pose(before, after);
  Action a;
  a.dx = delta.dx / cfg.exec_step;
  a.rot = delta.rot;
  a.g = cmd.close ? grip::GripperState::kClose : grip::GripperState::kOpen;
  return a;
}

bool push_success(const WorldState& s) {
  return (s.objects[s.obj_a].xy - s.goal).norm() <= s.goal_radius;
}

bool stack_success(const WorldState& s, const SimConfig& cfg) {
  const ObjectState& a = s.objects[s.obj_a];
  const ObjectState& b = s.objects[s.obj_b];
  return !a.carried && a.resting_on == s.obj_b &&
         (a.xy - b.xy).norm() <= cfg.stack_lateral_tol * b.radius;
}

std::optional<ToolCmd> Expert::next(const WorldState& s) {
  const ObjectState& obj = s.objects[s.obj_a];
  ToolCmd cmd;
  cmd.tip = s.tip;
  cmd.tip_z = s.tip_z;
  cmd.yaw = s.yaw;
  cmd.close = s.close_cmd;

  const auto move_toward = [&](const Vec2& target, double z_target,
                               bool turn = true) {
    Vec2 d = target - s.tip;
    const double dz = z_target - s.tip_z;
    const double n3 = std::sqrt(d.squaredNorm() + dz * dz);
    const double step = 0.95 * cfg_.max_step;
    const double k = n3 > step ? step / n3 : 1.0;
    cmd.tip = s.tip + k * d;
    cmd.tip_z = s.tip_z + k * dz;
    if (turn && d.norm() > 0.004) cmd.yaw = yaw_of_dir(d);
  };

  if (task_ == data::Task::kPush) {
    if (push_success(s)) {
      if (settle_++ < 2) return cmd;  // hold a couple of frames
      return std::nullopt;
    }
    const Vec2 dir = (s.goal - obj.xy).normalized();
    const double rc = obj.radius + cfg_.tool_r;
    const Vec2 behind = obj.xy - dir * (rc + 0.05);
    if (phase_ == 0) {
      if ((s.tip - behind).norm() < 0.015) {
        phase_ = 1;
      } else {
        Vec2 target = behind;
        if (dist_point_segment(obj.xy, s.tip, behind) < rc + 0.015) {
          // sidestep around the object on the tool's side of the push line
          const Vec2 rel = s.tip - obj.xy;
          const double side = dir.x() * rel.y() - dir.y() * rel.x() >= 0 ? 1 : -1;
          const Vec2 perp(-dir.y() * side, dir.x() * side);
          target = obj.xy + perp * (rc + 0.07);
        }
        move_toward(target, kPushZ);
        return cmd;
      }
    }
    // push through the contact point toward the goal
    move_toward(obj.xy - dir * (rc - 0.012), kPushZ);
    return cmd;
  }

  // stacking
  const ObjectState& b = s.objects[s.obj_b];
  switch (phase_) {
    case 0:  // travel above the small object
      move_toward(obj.xy, kHoverZ);
      if ((s.tip - obj.xy).norm() < 0.008 && std::abs(s.tip_z - kHoverZ) < 0.012)
        phase_ = 1;
      return cmd;
    case 1:  // descend into the grasp window
      move_toward(obj.xy, obj.base_z + 0.015, /*turn=*/false);
      if (std::abs(s.tip_z - (obj.base_z + 0.015)) < 0.006 &&
          (s.tip - obj.xy).norm() < 0.008)
        phase_ = 2;
      return cmd;
    case 2:  // close
      cmd.close = true;
      phase_ = 3;
      return cmd;
    case 3:  // verify the grasp, lift
      if (s.attached != s.obj_a) return std::nullopt;  // failed grasp
      move_toward(s.tip, kLiftZ, /*turn=*/false);
      if (s.tip_z > kLiftZ - 0.01) phase_ = 4;
      return cmd;
    case 4:  // travel above the base object
      move_toward(b.xy, kLiftZ);
      if ((s.tip - b.xy).norm() < 0.006) phase_ = 5;
      return cmd;
    case 5: {  // descend to the release height
      const double place_z = b.base_z + b.height - s.attach_dz + 0.004;
      move_toward(b.xy, place_z, /*turn=*/false);
      if (std::abs(s.tip_z - place_z) < 0.005 && (s.tip - b.xy).norm() < 0.006)
        phase_ = 6;
      return cmd;
    }
    case 6:  // open
      cmd.close = false;
      phase_ = 7;
      return cmd;
    default:
      if (settle_++ < 2) return cmd;
      return std::nullopt;
  }
}

SceneParams sample_scene(const TaskSpec& task, uint64_t scene_seed) {
  Rng rng(mix_seed({scene_seed, 0x5ce9eull,
                    static_cast<uint64_t>(task.kind == data::Task::kPush ? 1 : 2)}));
  SceneParams scene;
  scene.scene_seed = scene_seed;
  scene.table_color =
      hsv_to_rgb(rng.uniform(0, 360), rng.uniform(0.04, 0.22), rng.uniform(0.35, 0.75));
  scene.speckle = rng.uniform(0.02, 0.06);

  const auto add_object = [&](double rmin, double rmax, double height) {
    ObjectState o;
    o.radius = rng.uniform(rmin, rmax);
    o.height = height;
    o.shape = rng.bernoulli(0.5) ? Shape::kDisc : Shape::kSquare;
    const double hue = rng.uniform(40, 320);  // keep clear of the red goal
    o.color = hsv_to_rgb(hue, rng.uniform(0.6, 0.95), rng.uniform(0.55, 0.95));
    scene.objects.push_back(o);
    scene.object_tags.push_back(
        (o.shape == Shape::kDisc ? std::string("disc_h") : std::string("square_h")) +
        std::to_string(static_cast<int>(hue)));
    return scene.objects.size() - 1;
  };

  if (task.kind == data::Task::kPush) {
    add_object(0.045, 0.07, 0.03);
    const int distractors = static_cast<int>(rng.below(3));
    for (int i = 0; i < distractors; ++i) add_object(0.03, 0.05, 0.03);
  } else {
    add_object(0.020, 0.027, 0.03);   // graspable small object
    add_object(0.055, 0.08, 0.035);   // larger base object
    if (rng.bernoulli(0.5)) add_object(0.03, 0.045, 0.03);
  }
  return scene;
}

WorldState sample_episode(const TaskSpec& task, const SceneParams& scene,
                          uint64_t episode_seed, const SimConfig& cfg) {
  Rng rng(mix_seed({scene.scene_seed, episode_seed, 0xe915ull}));
  for (int attempt = 0; attempt < 40; ++attempt) {
    WorldState s;
    s.objects = scene.objects;
    s.tip_z = kPushZ;

    if (task.kind == data::Task::kPush) {
      ObjectState& obj = s.objects[0];
      obj.xy = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
      const double ang = rng.uniform(0, 2 * M_PI);
      const double dist = rng.uniform(0.25, 0.42);
      s.goal = obj.xy + dist * Vec2(std::cos(ang), std::sin(ang));
      s.goal_radius = cfg.goal_radius_factor * obj.radius;
      const double gm = cfg.arena_margin + s.goal_radius;
      if (s.goal.x() < gm || s.goal.x() > 1 - gm || s.goal.y() < gm ||
          s.goal.y() > 1 - gm)
        continue;
      const double spawn_ang = rng.uniform(0, 2 * M_PI);
      s.tip = obj.xy + rng.uniform(0.16, 0.30) *
                           Vec2(std::cos(spawn_ang), std::sin(spawn_ang));
      if (s.tip.x() < cfg.arena_margin + 0.02 || s.tip.x() > 0.98 - cfg.arena_margin ||
          s.tip.y() < cfg.arena_margin + 0.02 || s.tip.y() > 0.98 - cfg.arena_margin)
        continue;
      if ((s.tip - s.goal).norm() < s.goal_radius + 0.05) continue;
      bool ok = true;
      for (size_t i = 1; i < s.objects.size(); ++i) {
        ObjectState& d = s.objects[i];
        d.xy = {rng.uniform(0.12, 0.88), rng.uniform(0.12, 0.88)};
        if (dist_point_segment(d.xy, obj.xy, s.goal) < 0.14 ||
            (d.xy - s.tip).norm() < 0.12 || (d.xy - obj.xy).norm() < 0.12 ||
            (d.xy - s.goal).norm() < s.goal_radius + d.radius + 0.03)
          ok = false;
      }
      if (!ok) continue;
      s.yaw = yaw_of_dir(obj.xy - s.tip) + rng.uniform(-0.4, 0.4);
      s.obj_a = 0;
      s.goal_radius = cfg.goal_radius_factor * obj.radius;
      return s;
    }

    // stacking: small object in front (smaller y), base object behind
    ObjectState& a = s.objects[0];
    ObjectState& b = s.objects[1];
    a.xy = {rng.uniform(0.35, 0.65), rng.uniform(0.30, 0.50)};
    b.xy = a.xy + Vec2(rng.uniform(-0.06, 0.06), rng.uniform(0.14, 0.24));
    if (b.xy.x() < 0.15 || b.xy.x() > 0.85 || b.xy.y() > 0.88) continue;
    if ((a.xy - b.xy).norm() < a.radius + b.radius + 0.03) continue;
    bool ok = true;
    for (size_t i = 2; i < s.objects.size(); ++i) {
      ObjectState& d = s.objects[i];
      d.xy = {rng.uniform(0.12, 0.88), rng.uniform(0.55, 0.88)};
      if ((d.xy - a.xy).norm() < 0.14 || (d.xy - b.xy).norm() < d.radius + b.radius + 0.04)
        ok = false;
    }
    if (!ok) continue;
    s.tip = a.xy + Vec2(rng.uniform(-0.10, 0.10), -rng.uniform(0.15, 0.28));
    if (s.tip.y() < cfg.arena_margin + 0.02) continue;
    s.yaw = yaw_of_dir(a.xy - s.tip) + rng.uniform(-0.3, 0.3);
    s.goal_radius = 0;  // no goal disc in stacking scenes
    s.obj_a = 0;
    s.obj_b = 1;
    return s;
  }
  throw DegenerateInput("sample_episode: no valid layout found");
}

DemoBundle generate_demo(const TaskSpec& task, uint64_t episode_seed,
                         const DemoGenOptions& opts, const SimConfig& cfg,
                         const std::string& id) {
  const SceneParams scene = sample_scene(task, task.scene_seed);

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    const uint64_t seed = episode_seed + static_cast<uint64_t>(attempt);
    WorldState s;
    try {
      s = sample_episode(task, scene, seed, cfg);
    } catch (const DegenerateInput&) {
      continue;
    }
    Expert expert(task.kind, cfg);
    std::vector<WorldState> states{s};
    bool expert_ok = true;
    for (int t = 0; t < opts.max_steps; ++t) {
      const auto cmd = expert.next(states.back());
      if (!cmd.has_value()) break;
      states.push_back(apply_tool(states.back(), *cmd, cfg));
    }
    const WorldState& final_state = states.back();
    const bool success = task.kind == data::Task::kPush
                             ? push_success(final_state)
                             : stack_success(final_state, cfg);
    if (!success || states.size() < 10) expert_ok = false;
    if (!expert_ok) continue;

    DemoBundle bundle;
    bundle.id = id;
    bundle.task = task;
    bundle.scene = scene;
    bundle.episode_seed = seed;
    Rng rng(mix_seed({seed, 0xdec7ull}));
    bundle.scale_factor =
        opts.scale_factor > 0
            ? opts.scale_factor
            : std::exp(rng.uniform(std::log(0.2), std::log(5.0)));

    std::vector<std::string> frame_names;
    for (size_t t = 0; t < states.size(); ++t) {
      const WorldState& st = states[t];
      bundle.frames.push_back(render(st, scene, cfg));
      const geom::Pose cam = camera_pose(st, cfg);
      bundle.cam_poses.push_back(cam);
      bundle.gt_states.push_back(st.close_cmd ? grip::GripperState::kClose
                                              : grip::GripperState::kOpen);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%04zu.ppm", t);
      frame_names.emplace_back(name);

      const auto [fl, fr] = finger_tips(st, cfg);
      grip::FingerDetection det;
      det.frame_index = static_cast<int64_t>(t);
      Vec2 pl = project(cam, cfg, fl);
      Vec2 pr = project(cam, cfg, fr);
      if (opts.detection_noise_px > 0 || opts.low_conf_prob > 0) {
        const bool unreliable = rng.bernoulli(opts.low_conf_prob);
        const double sigma =
            opts.detection_noise_px * (unreliable ? 4.0 : 1.0);
        pl += sigma * Vec2(rng.normal(), rng.normal());
        pr += sigma * Vec2(rng.normal(), rng.normal());
        det.confidence =
            unreliable ? rng.uniform(0.2, 0.45)
                       : std::clamp(1.0 - std::abs(rng.normal()) * 0.015, 0.85, 1.0);
      } else {
        det.confidence = 1.0;
      }
      det.left_tip = pl;
      det.right_tip = pr;
      bundle.detections.push_back(det);
    }

    sfm::FramePoseSeq seq;
    seq.trajectory_id = id;
    for (size_t t = 0; t < states.size(); ++t)
      seq.frames.push_back({static_cast<int64_t>(t), bundle.cam_poses[t],
                            frame_names[t]});
    data::DemoMeta meta;
    meta.scene_id = scene.scene_id;
    meta.object_tags = scene.object_tags;
    meta.task = task.kind;
    bundle.gt_labels = data::assemble(seq, bundle.gt_states, frame_names, meta);
    return bundle;
  }
  throw DegenerateInput("generate_demo: expert failed for every attempted seed");
}

void write_bundle(const std::filesystem::path& dir, const DemoBundle& bundle,
                  const SimConfig& cfg) {
  std::filesystem::create_directories(dir / "frames");
  std::filesystem::create_directories(dir / "sfm");
  for (size_t t = 0; t < bundle.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", t);
    img::write_ppm(dir / "frames" / name, bundle.frames[t]);
  }

  std::vector<sfm::SfmImageRecord> records;
  for (size_t t = 0; t < bundle.cam_poses.size(); ++t) {
    const geom::Pose w2c = bundle.cam_poses[t].inverse();
    sfm::SfmImageRecord rec;
    rec.image_id = static_cast<int64_t>(t) + 1;
    rec.q = geom::rotmat_to_quat(w2c.R);
    rec.t = bundle.scale_factor * w2c.t;
    rec.camera_id = 1;
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", t);
    rec.name = name;
    records.push_back(std::move(rec));
  }
  write_text_file(dir / "sfm" / "images.txt", sfm::serialize_images_text(records));

  sfm::SfmCameraRecord cam;
  cam.camera_id = 1;
  cam.model_name = "PINHOLE";
  cam.width = cam.height = cfg.image_size;
  cam.params = {cfg.focal_px, cfg.focal_px, cfg.image_size / 2.0,
                cfg.image_size / 2.0};
  write_text_file(dir / "sfm" / "cameras.txt", sfm::serialize_cameras_text({cam}));
  write_text_file(dir / "sfm" / "points3D.txt", "# no sparse points\n");

  grip::write_detections_jsonl(dir / "grips.jsonl", bundle.detections);
  data::write_labels_json(dir / "gt_labels.json", bundle.gt_labels);

  const Json meta = {{"id", bundle.id},
                     {"task", data::task_name(bundle.task.kind)},
                     {"scene_id", bundle.scene.scene_id},
                     {"scene_seed", bundle.scene.scene_seed},
                     {"episode_seed", bundle.episode_seed},
                     {"scale_factor", bundle.scale_factor},
                     {"n_frames", bundle.frames.size()},
                     {"object_tags", bundle.scene.object_tags}};
  write_json_file(dir / "meta.json", meta);
}

data::DatasetManifest generate_corpus(const TaskSpec& base_task,
                                      const CorpusOptions& opts,
                                      const SimConfig& cfg,
                                      const std::filesystem::path& out_dir) {
  data::DatasetManifest manifest;
  const std::string prefix = data::task_name(base_task.kind);
  int collection = 0;
  for (int s = 0; s < opts.n_scenes; ++s) {
    TaskSpec task = base_task;
    task.scene_seed = mix_seed({opts.seed, static_cast<uint64_t>(s), 0x5ce11ull});
    for (int d = 0; d < opts.demos_per_scene; ++d) {
      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "%s_s%03d_d%02d", prefix.c_str(), s, d);
      const uint64_t ep_seed =
          mix_seed({opts.seed, static_cast<uint64_t>(s), static_cast<uint64_t>(d),
                    0xef12ull});
      DemoBundle bundle = generate_demo(task, ep_seed, opts.gen, cfg, idbuf);
      bundle.scene.scene_id = prefix + "_scene_" + std::to_string(s);
      bundle.gt_labels.scene_id = bundle.scene.scene_id;
      write_bundle(out_dir / "demos" / idbuf, bundle, cfg);

      data::DemoDescriptor desc;
      desc.id = idbuf;
      desc.scene_id = bundle.scene.scene_id;
      desc.object_tags = bundle.scene.object_tags;
      desc.task = base_task.kind;
      desc.path = std::string("demos/") + idbuf;
      desc.collection_index = collection++;
      manifest.add(std::move(desc));
    }
  }
  data::write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

RolloutResult rollout(const PolicyFn& policy, const TaskSpec& task,
                      uint64_t episode_seed, const SimConfig& cfg,
                      const RolloutOptions& opts) {
  const SceneParams scene = sample_scene(task, task.scene_seed);
  WorldState s = sample_episode(task, scene, episode_seed, cfg);

  RolloutResult result;
  result.episode_seed = episode_seed;
  for (int t = 0; t < opts.max_steps; ++t) {
    if (opts.disturbance.has_value() && t == opts.disturbance->at_step) {
      Rng rng(mix_seed({opts.disturbance->seed, episode_seed, 0xd157ull}));
      const double ang = rng.uniform(0, 2 * M_PI);
      const double mag = rng.uniform(0.4, 1.0) * opts.disturbance->magnitude;
      const Vec2 offset = mag * Vec2(std::cos(ang), std::sin(ang));
      if (task.kind == data::Task::kPush) {
        s.goal += offset;
        const double gm = cfg.arena_margin + s.goal_radius;
        s.goal.x() = std::clamp(s.goal.x(), gm, 1.0 - gm);
        s.goal.y() = std::clamp(s.goal.y(), gm, 1.0 - gm);
      } else {
        ObjectState& b = s.objects[s.obj_b];
        b.xy += offset;
        b.xy.x() = std::clamp(b.xy.x(), 0.15, 0.85);
        b.xy.y() = std::clamp(b.xy.y(), 0.15, 0.88);
      }
    }

    const img::ImageTensor frame = render(s, scene, cfg);
    Action a = policy(frame);
    if (!a.dx.allFinite() || !a.rot.allFinite()) a = Action{};  // freeze
    s = step(s, a, cfg);
    result.steps = t + 1;

    if (task.kind == data::Task::kPush) {
      if (push_success(s)) {
        result.reached_goal = true;
        break;
      }
    } else if (stack_success(s, cfg)) {
      result.stacked = true;
      break;
    }
  }
  result.reached_object = s.reached_object;
  result.grasped = s.grasped;
  if (task.kind == data::Task::kPush) {
    result.success = result.reached_goal;
    if (result.reached_goal) result.reached_object = true;  // contact implied
  } else {
    result.success = result.stacked;
  }
  return result;
}

RolloutResult rollout_expert_as_policy(const TaskSpec& task,
                                       uint64_t episode_seed,
                                       const SimConfig& cfg, int max_steps) {
  const SceneParams scene = sample_scene(task, task.scene_seed);
  // the shadow state advances through exactly the same step() path as the
  // real rollout, so the expert always sees the true world
  auto shadow = std::make_shared<WorldState>(
      sample_episode(task, scene, episode_seed, cfg));
  auto expert = std::make_shared<Expert>(task.kind, cfg);
  const PolicyFn policy = [shadow, expert, &cfg](const img::ImageTensor&) {
    const auto cmd = expert->next(*shadow);
    Action a;
    if (cmd.has_value()) {
      a = tool_cmd_to_action(*shadow, *cmd, cfg);
    } else {
      a.g = shadow->close_cmd ? grip::GripperState::kClose
                              : grip::GripperState::kOpen;
    }
    *shadow = step(*shadow, a, cfg);
    return a;
  };
  RolloutOptions opts;
  opts.max_steps = max_steps;
  return rollout(policy, task, episode_seed, cfg, opts);
}

}  // namespace demokit::sim
