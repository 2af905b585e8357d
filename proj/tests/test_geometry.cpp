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

#include <Eigen/Dense>
#include <cmath>

#include "demokit/error.hpp"
#include "demokit/geometry.hpp"
#include "demokit/rng.hpp"

using namespace demokit;
using namespace demokit::geom;

namespace {

Quat random_unit_quat(Rng& rng) {
  Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return q.normalized();
}

Mat3 random_rotation(Rng& rng) { return quat_to_rotmat(random_unit_quat(rng)); }

// Independent oracle: axis-angle of q via atan2, then the Rodrigues formula
// R = I + sin(t) K + (1 - cos(t)) K^2.
Mat3 rodrigues_from_quat(const Quat& q_in) {
  const Quat q = q_in.normalized();
  const double vnorm = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (vnorm < 1e-14) return Mat3::Identity();
  const double angle = 2.0 * std::atan2(vnorm, q.w);
  const Vec3 axis(q.x / vnorm, q.y / vnorm, q.z / vnorm);
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * (k * k);
}

// Independent oracle: relative pose via dense 4x4 homogeneous inversion.
Eigen::Matrix4d homogeneous(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = p.R;
  m.block<3, 1>(0, 3) = p.t;
  return m;
}

Mat3 rot_about_z(double theta) {
  Mat3 r;
  r << std::cos(theta), -std::sin(theta), 0, std::sin(theta), std::cos(theta),
      0, 0, 0, 1;
  return r;
}

}  // namespace

TEST_CASE("quat_to_rotmat identity and axis flips") {
  CHECK((quat_to_rotmat({1, 0, 0, 0}) - Mat3::Identity()).norm() == 0.0);
  Mat3 expect = Vec3(1, -1, -1).asDiagonal();
  CHECK((quat_to_rotmat({0, 1, 0, 0}) - expect).norm() == 0.0);
}

TEST_CASE("quat_to_rotmat matches Rodrigues oracle") {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    const Quat q = random_unit_quat(rng);
    CHECK((quat_to_rotmat(q) - rodrigues_from_quat(q)).norm() < 1e-12);
  }
}

TEST_CASE("quat sign invariance and zero-norm error") {
  Rng rng(102);
  for (int i = 0; i < 100; ++i) {
    const Quat q = random_unit_quat(rng);
    const Quat nq{-q.w, -q.x, -q.y, -q.z};
    CHECK((quat_to_rotmat(q) - quat_to_rotmat(nq)).norm() == 0.0);
  }
  CHECK_THROWS_AS(quat_to_rotmat({0, 0, 0, 0}), DegenerateInput);
  const Quat tiny{1e-13, 0, 0, 0};
  CHECK_THROWS_AS(tiny.normalized(), DegenerateInput);
}

TEST_CASE("rotmat_to_quat round trip, canonical sign") {
  Rng rng(103);
  for (int i = 0; i < 500; ++i) {
    const Mat3 r = random_rotation(rng);
    const Quat q = rotmat_to_quat(r);
    CHECK(q.w >= 0.0);
    CHECK(std::abs(q.norm() - 1.0) < 1e-9);
    CHECK((quat_to_rotmat(q) - r).norm() < 1e-12);
  }
  // A pi rotation exercises the w == 0 canonicalization branch.
  const Quat q = rotmat_to_quat(quat_to_rotmat({0, 0, 0, -1}));
  CHECK(q.z > 0.0);
}

TEST_CASE("6d representation trivial cases") {
  const Rot6d id6 = rotmat_to_6d(Mat3::Identity());
  CHECK(id6.v == std::array<double, 6>{1, 0, 0, 0, 1, 0});
  CHECK((rot6d_to_rotmat(id6) - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("6d round trip over random rotations") {
  Rng rng(104);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    CHECK((rot6d_to_rotmat(rotmat_to_6d(r)) - r).norm() < 1e-9);
  }
}

TEST_CASE("6d recovery of a perturbed 6-vector is orthonormal") {
  Rot6d w;
  w.v = {1, 0.1, 0, 0, 1, 0};
  const Mat3 r = rot6d_to_rotmat(w);
  CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("6d collinear columns rejected") {
  Rot6d w;
  w.v = {1, 0, 0, 1, 1e-9, 0};
  CHECK_THROWS_AS(rot6d_to_rotmat(w), DegenerateInput);
  Rot6d z;
  z.v = {0, 0, 0, 0, 1, 0};
  CHECK_THROWS_AS(rot6d_to_rotmat(z), DegenerateInput);
}

TEST_CASE("relative_pose trivial cases") {
  Pose a, b;
  b.t = Vec3(1, 0, 0);
  const ActionDelta d = relative_pose(a, b);
  CHECK(d.dx == Vec3(1, 0, 0));
  CHECK((d.rot - Mat3::Identity()).norm() == 0.0);

  const ActionDelta zero = relative_pose(b, b);
  CHECK(zero.dx.norm() == 0.0);
  CHECK((zero.rot - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("relative_pose matches homogeneous-matrix oracle") {
  Rng rng(105);
  for (int i = 0; i < 200; ++i) {
    Pose a{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    Pose b{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    const ActionDelta d = relative_pose(a, b);
    const Eigen::Matrix4d expect = homogeneous(a).inverse() * homogeneous(b);
    CHECK((d.rot - expect.block<3, 3>(0, 0)).norm() < 1e-9);
    CHECK((d.dx - expect.block<3, 1>(0, 3)).norm() < 1e-9);
  }
}

TEST_CASE("relative_pose composition closure") {
  Rng rng(106);
  for (int i = 0; i < 200; ++i) {
    Pose a{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    Pose b{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    const ActionDelta d = relative_pose(a, b);
    Pose step{d.rot, d.dx};
    const Pose back = a * step;
    CHECK((back.R - b.R).norm() < 1e-9);
    CHECK((back.t - b.t).norm() < 1e-9);
  }
}

TEST_CASE("normalize_trajectory forced examples") {
  std::vector<ActionDelta> two(2);
  two[0].dx = Vec3(2, 0, 0);
  two[1].dx = Vec3(4, 0, 0);
  const auto out = normalize_trajectory(two);
  CHECK((out[0].dx - Vec3(2.0 / 3.0, 0, 0)).norm() < 1e-15);
  CHECK((out[1].dx - Vec3(4.0 / 3.0, 0, 0)).norm() < 1e-15);

  std::vector<ActionDelta> one(1);
  one[0].dx = Vec3(5, 0, 0);
  CHECK((normalize_trajectory(one)[0].dx - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("normalize_trajectory mean, ratios, idempotence") {
  Rng rng(107);
  std::vector<ActionDelta> deltas(37);
  for (auto& d : deltas)
    d.dx = Vec3(rng.normal(), rng.normal(), rng.normal()) * rng.uniform(0.1, 9);
  const auto out = normalize_trajectory(deltas);

  double mean = 0;
  for (const auto& d : out) mean += d.dx.norm();
  mean /= static_cast<double>(out.size());
  CHECK(std::abs(mean - 1.0) < 1e-9);

  for (size_t i = 1; i < out.size(); ++i) {
    const double before = deltas[i].dx.norm() / deltas[0].dx.norm();
    const double after = out[i].dx.norm() / out[0].dx.norm();
    CHECK(std::abs(before - after) < 1e-9);
  }

  const auto twice = normalize_trajectory(out);
  for (size_t i = 0; i < out.size(); ++i)
    CHECK((twice[i].dx - out[i].dx).norm() < 1e-9);
}

TEST_CASE("normalize_trajectory degenerate inputs") {
  std::vector<ActionDelta> zeros(3);
  CHECK_THROWS_AS(normalize_trajectory(zeros), DegenerateInput);
  CHECK_THROWS_AS(normalize_trajectory({}), DegenerateInput);
}

TEST_CASE("normalize_trajectory alternate statistics") {
  std::vector<ActionDelta> two(2);
  two[0].dx = Vec3(2, 0, 0);
  two[1].dx = Vec3(4, 0, 0);
  CHECK(normalize_trajectory(two, NormStat::kMax)[1].dx.x() ==
        doctest::Approx(1.0));
  CHECK(normalize_trajectory(two, NormStat::kSum)[1].dx.x() ==
        doctest::Approx(4.0 / 6.0));
}

TEST_CASE("conjugate_reflect trivial and involution") {
  CHECK((conjugate_reflect(Mat3::Identity()) - Mat3::Identity()).norm() == 0.0);

  const double theta = 0.7;
  CHECK((conjugate_reflect(rot_about_z(theta)) - rot_about_z(-theta)).norm() <
        1e-15);

  Rng rng(108);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    const Mat3 m = conjugate_reflect(r);
    CHECK((m.transpose() * m - Mat3::Identity()).norm() < 1e-12);
    CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((conjugate_reflect(m) - r).norm() == 0.0);  // exact involution
  }
}

TEST_CASE("reflect_6d agrees with conjugate_reflect and is exact involution") {
  Rng rng(109);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    const Rot6d w = rotmat_to_6d(r);
    const Rot6d wr = reflect_6d(w);
    const Rot6d expect = rotmat_to_6d(conjugate_reflect(r));
    for (int k = 0; k < 6; ++k) CHECK(wr.v[k] == expect.v[k]);
    const Rot6d back = reflect_6d(wr);
    for (int k = 0; k < 6; ++k) CHECK(back.v[k] == w.v[k]);
  }
}
