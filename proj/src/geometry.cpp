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

#include "demokit/geometry.hpp"

#include <cmath>

#include "demokit/error.hpp"

namespace demokit::geom {

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  if (n <= 1e-12) throw DegenerateInput("zero-norm quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::canonical() const {
  Quat q = normalized();
  bool flip = q.w < 0.0;
  if (q.w == 0.0) {
    if (q.x != 0.0)
      flip = q.x < 0.0;
    else if (q.y != 0.0)
      flip = q.y < 0.0;
    else
      flip = q.z < 0.0;
  }
  if (flip) return {-q.w, -q.x, -q.y, -q.z};
  return q;
}

Mat3 quat_to_rotmat(const Quat& q_in) {
  const Quat q = q_in.normalized();
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Quat rotmat_to_quat(const Mat3& r) {
  // Shepperd's method: pick the largest diagonal combination for stability.
  const double tr = r(0, 0) + r(1, 1) + r(2, 2);
  Quat q;
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r(2, 1) - r(1, 2)) / s;
    q.y = (r(0, 2) - r(2, 0)) / s;
    q.z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q.w = (r(2, 1) - r(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (r(0, 1) + r(1, 0)) / s;
    q.z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q.w = (r(0, 2) - r(2, 0)) / s;
    q.x = (r(0, 1) + r(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (r(1, 2) + r(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q.w = (r(1, 0) - r(0, 1)) / s;
    q.x = (r(0, 2) + r(2, 0)) / s;
    q.y = (r(1, 2) + r(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.canonical();
}

Rot6d rotmat_to_6d(const Mat3& r) {
  Rot6d w;
  w.v = {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
  return w;
}

Mat3 rot6d_to_rotmat(const Rot6d& w) {
  const Vec3 a1 = w.col0();
  const Vec3 a2 = w.col1();
  const double n1 = a1.norm();
  const double n2 = a2.norm();
  if (n1 <= 1e-12 || n2 <= 1e-12)
    throw DegenerateInput("6d rotation has a near-zero column");
  const Vec3 b1 = a1 / n1;
  const Vec3 rej = a2 - b1.dot(a2) * b1;
  // |rej| / |a2| = sin(angle between the columns).
  if (rej.norm() <= 1e-6 * n2)
    throw DegenerateInput("6d rotation columns are collinear");
  const Vec3 b2 = rej.normalized();
  const Vec3 b3 = b1.cross(b2);
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

Rot6d reflect_6d(const Rot6d& w) {
  Rot6d out;
  out.v = {w.v[0], -w.v[1], -w.v[2], -w.v[3], w.v[4], w.v[5]};
  return out;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

Vec3 Pose::operator*(const Vec3& p) const { return R * p + t; }

ActionDelta relative_pose(const Pose& a, const Pose& b) {
  ActionDelta d;
  d.rot = a.R.transpose() * b.R;
  d.dx = a.R.transpose() * (b.t - a.t);
  return d;
}

std::vector<ActionDelta> normalize_trajectory(std::vector<ActionDelta> deltas,
                                              NormStat stat) {
  if (deltas.empty()) throw DegenerateInput("empty trajectory");
  double acc = 0.0;
  for (const ActionDelta& d : deltas) {
    const double n = d.dx.norm();
    switch (stat) {
      case NormStat::kMean:
      case NormStat::kSum:
        acc += n;
        break;
      case NormStat::kMax:
        acc = std::max(acc, n);
        break;
    }
  }
  if (stat == NormStat::kMean) acc /= static_cast<double>(deltas.size());
  if (acc <= 1e-12)
    throw DegenerateInput("degenerate trajectory: all step norms ~zero");
  const double scale = 1.0 / acc;
  for (ActionDelta& d : deltas) d.dx *= scale;
  return deltas;
}

Mat3 conjugate_reflect(const Mat3& r) {
  Mat3 out = r;
  out(0, 1) = -r(0, 1);
  out(0, 2) = -r(0, 2);
  out(1, 0) = -r(1, 0);
  out(2, 0) = -r(2, 0);
  return out;
}

}  // namespace demokit::geom
