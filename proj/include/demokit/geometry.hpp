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
#include <Eigen/Geometry>
#include <array>
#include <vector>

namespace demokit::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion in (w, x, y, z) order, matching the SfM text records.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  bool operator==(const Quat&) const = default;

  double norm() const;
  /// Unit-norm copy. Throws DegenerateInput when the norm is ~zero.
  Quat normalized() const;
  /// Unit-norm copy with the canonical sign (w >= 0; ties broken toward
  /// the first nonzero of x, y, z being positive) so serialization is
  /// deterministic.
  Quat canonical() const;
};

Mat3 quat_to_rotmat(const Quat& q);
Quat rotmat_to_quat(const Mat3& r);

/// First two columns of a rotation matrix, column-major: (r00,r10,r20, r01,r11,r21).
struct Rot6d {
  std::array<double, 6> v{1, 0, 0, 0, 1, 0};

  Eigen::Map<const Vec3> col0() const { return Eigen::Map<const Vec3>(v.data()); }
  Eigen::Map<const Vec3> col1() const { return Eigen::Map<const Vec3>(v.data() + 3); }
};

Rot6d rotmat_to_6d(const Mat3& r);

/// Gram-Schmidt recovery: b1 = normalize(a1), b2 = normalize(a2 - (b1.a2) b1),
/// b3 = b1 x b2. Throws DegenerateInput when the two columns are collinear
/// (angle below ~1e-6 rad) or near zero.
Mat3 rot6d_to_rotmat(const Rot6d& w);

/// Mirror conjugation restricted to the stored columns; pure sign flips, so it
/// is an exact involution. Equals the first two columns of conjugate_reflect
/// of the recovered matrix.
Rot6d reflect_6d(const Rot6d& w);

/// Rigid camera-to-world transform: maps camera-frame points into the world.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Vec3 operator*(const Vec3& p) const;
};

/// One step of the action trajectory: translation in the frame of the earlier
/// camera, plus the relative rotation.
struct ActionDelta {
  Vec3 dx = Vec3::Zero();
  Mat3 rot = Mat3::Identity();
};

/// Relative motion a -> b expressed in the frame of a: delta = a^-1 * b.
/// Composing a with the result reproduces b.
ActionDelta relative_pose(const Pose& a, const Pose& b);

/// Statistic used to fix the arbitrary SfM scale of a trajectory.
enum class NormStat { kMean, kMax, kSum };

/// Uniformly rescales translations so the chosen statistic of the step norms
/// equals 1. Rotations untouched; relative step ratios preserved. Throws
/// DegenerateInput when every translation is ~zero.
std::vector<ActionDelta> normalize_trajectory(std::vector<ActionDelta> deltas,
                                              NormStat stat = NormStat::kMean);

/// Conjugation by the mirror M = diag(-1, 1, 1): R' = M R M. Implemented as
/// sign flips on the first row and column, so applying twice is exact.
Mat3 conjugate_reflect(const Mat3& r);

}  // namespace demokit::geom
