#pragma once

#include <array>
#include <string>
#include <vector>

namespace vsf {

using Vec3 = std::array<double, 3>;

/// Unit quaternion, scalar-last (x, y, z, w).
struct Quaternion {
  double x = 0.0, y = 0.0, z = 0.0, w = 1.0;

  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {-x, -y, -z, w}; }
  Quaternion operator-() const { return {-x, -y, -z, -w}; }

  /// Hamilton product.
  Quaternion operator*(const Quaternion& o) const;
};

/// 6-DoF rigid pose: position in meters, unit-quaternion orientation.
struct Pose {
  Vec3 position{0.0, 0.0, 0.0};
  Quaternion orientation{};
};

/// State vector with a named channel schema ("pitch", "roll", ...).
struct RobotState {
  std::vector<double> values;
  std::vector<std::string> schema;
};

/// Euler angles of an intrinsic yaw-pitch-roll (Z-Y-X) composition.
/// Body axes: x forward, y left, z up. Positive pitch tilts the nose down.
struct EulerZYX {
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
};

Quaternion quat_from_euler(double roll, double pitch, double yaw);
EulerZYX euler_from_quat(const Quaternion& q);

Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

/// 3x3 rotation matrix of q, row-major.
std::array<double, 9> quat_to_matrix(const Quaternion& q);

/// Geodesic distance 2*acos(|<q1,q2>|) in degrees, in [0, 180].
/// Invariant to the double cover (q and -q are at distance 0).
double rotation_distance_deg(const Quaternion& q1, const Quaternion& q2);

/// Wrap an angle into (-pi, pi]; a tie at -pi maps to +pi.
double wrap_angle(double a);

/// Label of the target relative to the observer's base frame (observer
/// position and yaw kept, roll and pitch zeroed): (x, y, z) in meters
/// plus relative yaw phi in radians.
std::array<double, 4> relative_pose_base_frame(const Pose& observer_world,
                                               const Pose& target_world);

}  // namespace vsf
