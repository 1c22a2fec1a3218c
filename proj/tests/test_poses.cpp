#include <array>
#include <cmath>

#include "doctest.h"
#include "vsf/poses.hpp"
#include "vsf/rng.hpp"

using namespace vsf;

namespace {

constexpr double kPi = 3.14159265358979323846;

Quaternion random_unit_quat(SplitMix64& rng) {
  Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return q.normalized();
}

// independent oracle: rotate through the explicit 3x3 matrix
Vec3 matrix_rotate(const Quaternion& q, const Vec3& v) {
  const auto r = quat_to_matrix(q);
  return {r[0] * v[0] + r[1] * v[1] + r[2] * v[2],
          r[3] * v[0] + r[4] * v[1] + r[5] * v[2],
          r[6] * v[0] + r[7] * v[1] + r[8] * v[2]};
}

}  // namespace

TEST_CASE("quat_from_euler closed-form values") {
  const Quaternion id = quat_from_euler(0, 0, 0);
  CHECK(id.x == doctest::Approx(0).epsilon(1e-12));
  CHECK(id.y == doctest::Approx(0).epsilon(1e-12));
  CHECK(id.z == doctest::Approx(0).epsilon(1e-12));
  CHECK(id.w == doctest::Approx(1).epsilon(1e-12));

  // half-angle formula: yaw pi about z -> (0,0,1,0)
  const Quaternion yaw_pi = quat_from_euler(0, 0, kPi);
  CHECK(std::abs(yaw_pi.x) < 1e-12);
  CHECK(std::abs(yaw_pi.y) < 1e-12);
  CHECK(yaw_pi.z == doctest::Approx(1.0));
  CHECK(std::abs(yaw_pi.w) < 1e-12);

  // half-angle formula: pitch pi/2 -> (0, sin(pi/4), 0, cos(pi/4))
  const Quaternion pitch_q = quat_from_euler(0, kPi / 2, 0);
  CHECK(pitch_q.x == doctest::Approx(0.0));
  CHECK(pitch_q.y == doctest::Approx(std::sin(kPi / 4)));
  CHECK(pitch_q.z == doctest::Approx(0.0));
  CHECK(pitch_q.w == doctest::Approx(std::cos(kPi / 4)));
}

TEST_CASE("quat_from_euler produces unit quaternions") {
  SplitMix64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q = quat_from_euler(rng.uniform(-kPi, kPi),
                                         rng.uniform(-kPi / 2, kPi / 2),
                                         rng.uniform(-kPi, kPi));
    CHECK(std::abs(q.norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("euler round-trips through quaternion") {
  SplitMix64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const double roll = rng.uniform(-1.4, 1.4);
    const double pitch = rng.uniform(-1.4, 1.4);
    const double yaw = rng.uniform(-kPi + 0.01, kPi);
    const EulerZYX e = euler_from_quat(quat_from_euler(roll, pitch, yaw));
    CHECK(e.roll == doctest::Approx(roll).epsilon(1e-9));
    CHECK(e.pitch == doctest::Approx(pitch).epsilon(1e-9));
    CHECK(e.yaw == doctest::Approx(yaw).epsilon(1e-9));
  }
}

TEST_CASE("quat_rotate basics") {
  const Vec3 v{1, 2, 3};
  const Vec3 r = quat_rotate(Quaternion{}, v);
  CHECK(r[0] == doctest::Approx(1));
  CHECK(r[1] == doctest::Approx(2));
  CHECK(r[2] == doctest::Approx(3));

  // yaw pi/2 about z takes x to y
  const Vec3 y = quat_rotate(quat_from_euler(0, 0, kPi / 2), Vec3{1, 0, 0});
  CHECK(y[0] == doctest::Approx(0).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(1));
  CHECK(std::abs(y[2]) < 1e-12);
}

TEST_CASE("quat_rotate agrees with the rotation-matrix oracle") {
  SplitMix64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q = random_unit_quat(rng);
    const Vec3 v{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec3 a = quat_rotate(q, v);
    const Vec3 b = matrix_rotate(q, v);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-9);
    // norm preservation
    const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    CHECK(std::abs(na - nv) <= 1e-6 * (1.0 + nv));
  }
}

TEST_CASE("rotation_distance_deg values and double cover") {
  SplitMix64 rng(14);
  const Quaternion q = random_unit_quat(rng);
  CHECK(rotation_distance_deg(q, q) == doctest::Approx(0.0));
  CHECK(rotation_distance_deg(q, -q) == doctest::Approx(0.0));

  // 90 deg about z vs identity: |dot| = cos(45 deg) -> 90
  const Quaternion z90 = quat_from_euler(0, 0, kPi / 2);
  CHECK(rotation_distance_deg(Quaternion{}, z90) == doctest::Approx(90.0));
}

TEST_CASE("rotation_distance_deg triangle inequality") {
  SplitMix64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const Quaternion a = random_unit_quat(rng);
    const Quaternion b = random_unit_quat(rng);
    const Quaternion c = random_unit_quat(rng);
    CHECK(rotation_distance_deg(a, c) <=
          rotation_distance_deg(a, b) + rotation_distance_deg(b, c) + 1e-6);
  }
}

TEST_CASE("wrap_angle range and tie handling") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // tie maps to +pi
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2.5 * kPi) == doctest::Approx(0.5 * kPi));
  CHECK(wrap_angle(-2.5 * kPi) == doctest::Approx(-0.5 * kPi));
  SplitMix64 rng(16);
  for (int i = 0; i < 100; ++i) {
    const double w = wrap_angle(rng.uniform(-50, 50));
    CHECK(w > -kPi);
    CHECK(w <= kPi);
  }
}

TEST_CASE("relative_pose_base_frame examples") {
  // observer at origin, yaw 0, pitch 10 deg; base frame discards the pitch
  Pose obs;
  obs.orientation = quat_from_euler(0, 10 * kPi / 180, 0);
  Pose tgt;
  tgt.position = {2, 0, 0};
  auto label = relative_pose_base_frame(obs, tgt);
  CHECK(label[0] == doctest::Approx(2.0));
  CHECK(label[1] == doctest::Approx(0.0));
  CHECK(label[2] == doctest::Approx(0.0));
  CHECK(label[3] == doctest::Approx(0.0));

  // hand rigid-transform computation
  obs.position = {1, 1, 0.5};
  obs.orientation = quat_from_euler(0, 0, kPi / 2);
  tgt.position = {1, 3, 0.5};
  tgt.orientation = quat_from_euler(0, 0, kPi / 2);
  label = relative_pose_base_frame(obs, tgt);
  CHECK(label[0] == doctest::Approx(2.0));
  CHECK(std::abs(label[1]) < 1e-12);
  CHECK(std::abs(label[2]) < 1e-12);
  CHECK(std::abs(label[3]) < 1e-12);

  // subject facing the observer: phi = pi
  obs = Pose{};
  tgt = Pose{};
  tgt.position = {2, 0, 0};
  tgt.orientation = quat_from_euler(0, 0, kPi);
  label = relative_pose_base_frame(obs, tgt);
  CHECK(label[3] == doctest::Approx(kPi));
}

TEST_CASE("base-frame label invariant to observer pitch and roll") {
  SplitMix64 rng(17);
  for (int i = 0; i < 50; ++i) {
    Pose obs;
    obs.position = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
    const double yaw = rng.uniform(-kPi + 0.01, kPi);
    Pose tgt;
    tgt.position = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
    tgt.orientation = quat_from_euler(0, 0, rng.uniform(-kPi + 0.01, kPi));

    obs.orientation = quat_from_euler(0, 0, yaw);
    const auto base = relative_pose_base_frame(obs, tgt);
    obs.orientation = quat_from_euler(rng.uniform(-0.3, 0.3),
                                      rng.uniform(-0.3, 0.3), yaw);
    const auto tilted = relative_pose_base_frame(obs, tgt);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(base[k] - tilted[k]) < 1e-9);
  }
}
