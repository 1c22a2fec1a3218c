#include "vsf/poses.hpp"

#include <algorithm>
#include <cmath>

namespace vsf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double Quaternion::norm() const {
  return std::sqrt(x * x + y * y + z * z + w * w);
}

Quaternion Quaternion::normalized() const {
  double n = norm();
  return {x / n, y / n, z / n, w / n};
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x,
          w * o.z + x * o.y - y * o.x + z * o.w,
          w * o.w - x * o.x - y * o.y - z * o.z};
}

Quaternion quat_from_euler(double roll, double pitch, double yaw) {
  const double hr = 0.5 * roll, hp = 0.5 * pitch, hy = 0.5 * yaw;
  Quaternion qx{std::sin(hr), 0.0, 0.0, std::cos(hr)};
  Quaternion qy{0.0, std::sin(hp), 0.0, std::cos(hp)};
  Quaternion qz{0.0, 0.0, std::sin(hy), std::cos(hy)};
  return (qz * qy * qx).normalized();
}

std::array<double, 9> quat_to_matrix(const Quaternion& q) {
  const double x = q.x, y = q.y, z = q.z, w = q.w;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
          2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
          2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)};
}

EulerZYX euler_from_quat(const Quaternion& q) {
  auto r = quat_to_matrix(q);
  EulerZYX e;
  e.yaw = std::atan2(r[3], r[0]);
  e.pitch = std::asin(std::clamp(-r[6], -1.0, 1.0));
  e.roll = std::atan2(r[7], r[8]);
  return e;
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  // v' = v + 2*u x (u x v + w*v) with u the vector part
  const double ux = q.y * v[2] - q.z * v[1] + q.w * v[0];
  const double uy = q.z * v[0] - q.x * v[2] + q.w * v[1];
  const double uz = q.x * v[1] - q.y * v[0] + q.w * v[2];
  return {v[0] + 2.0 * (q.y * uz - q.z * uy),
          v[1] + 2.0 * (q.z * ux - q.x * uz),
          v[2] + 2.0 * (q.x * uy - q.y * ux)};
}

double rotation_distance_deg(const Quaternion& q1, const Quaternion& q2) {
  double d = std::abs(q1.x * q2.x + q1.y * q2.y + q1.z * q2.z + q1.w * q2.w);
  d = std::clamp(d, 0.0, 1.0);
  return 2.0 * std::acos(d) * 180.0 / kPi;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

std::array<double, 4> relative_pose_base_frame(const Pose& observer_world,
                                               const Pose& target_world) {
  const double yaw_o = euler_from_quat(observer_world.orientation).yaw;
  const double yaw_t = euler_from_quat(target_world.orientation).yaw;
  const double c = std::cos(yaw_o), s = std::sin(yaw_o);
  const double dx = target_world.position[0] - observer_world.position[0];
  const double dy = target_world.position[1] - observer_world.position[1];
  const double dz = target_world.position[2] - observer_world.position[2];
  // inverse of the yaw-only base rotation
  return {c * dx + s * dy, -s * dx + c * dy, dz, wrap_angle(yaw_t - yaw_o)};
}

}  // namespace vsf
