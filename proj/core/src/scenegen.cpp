#include "vsf/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vsf/errors.hpp"
#include "vsf/rng.hpp"

namespace vsf {

namespace {

bool finite_pose(const Pose& p) {
  return std::isfinite(p.position[0]) && std::isfinite(p.position[1]) &&
         std::isfinite(p.position[2]) && std::isfinite(p.orientation.x) &&
         std::isfinite(p.orientation.y) && std::isfinite(p.orientation.z) &&
         std::isfinite(p.orientation.w);
}

/// Procedural billboard texture: per-group two-tone split with an
/// off-center stripe whose side tracks the sign of the viewing yaw, plus a
/// group-keyed horizontal band. Overall shading follows (1+cos(phi))/2.
double billboard_intensity(int group, double hn, double vn, double phi_view) {
  const double dark = 40.0 + 8.0 * (group % 5);
  const double light = 190.0 + 4.0 * (group % 7);
  const double split = -0.10 + 0.05 * (group % 4);
  double tone = hn < split ? dark : light;
  const double stripe_c = phi_view >= 0.0 ? 0.15 : -0.15;
  if (std::abs(hn - stripe_c) < 0.04) tone = 120.0;
  const double band_c = -0.30 + 0.08 * (group % 8);
  if (std::abs(vn - band_c) < 0.05) tone = 0.5 * (dark + light);
  return tone * 0.5 * (1.0 + std::cos(phi_view));
}

}  // namespace

ScenePoses sample_scene(const SceneConfig& config, std::uint64_t index,
                        std::uint32_t attempt) {
  SplitMix64 rng = SplitMix64::stream(
      config.seed, index * 0x100000000ULL + attempt);
  ScenePoses sp;
  const double ox = rng.uniform(config.observer_xy.lo, config.observer_xy.hi);
  const double oy = rng.uniform(config.observer_xy.lo, config.observer_xy.hi);
  const double oz = rng.uniform(config.observer_z.lo, config.observer_z.hi);
  const double yaw = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
  sp.pitch = rng.uniform(config.pitch.lo, config.pitch.hi);
  sp.roll = rng.uniform(config.roll.lo, config.roll.hi);
  const double tx = rng.uniform(config.x.lo, config.x.hi);
  const double ty = rng.uniform(config.y.lo, config.y.hi);
  const double tz = rng.uniform(config.z.lo, config.z.hi);
  const double phi = rng.uniform(config.phi.lo, config.phi.hi);

  sp.observer.position = {ox, oy, oz};
  sp.observer.orientation = quat_from_euler(sp.roll, sp.pitch, yaw);
  const double c = std::cos(yaw), s = std::sin(yaw);
  sp.target.position = {ox + c * tx - s * ty, oy + s * tx + c * ty, oz + tz};
  sp.target.orientation = quat_from_euler(0.0, 0.0, wrap_angle(yaw + phi));
  sp.group_id =
      static_cast<std::uint16_t>(index % std::uint64_t(config.n_groups));
  return sp;
}

std::optional<std::array<double, 2>> project_point(
    const CameraIntrinsics& intrinsics, const Pose& camera_pose,
    const Vec3& world_point) {
  const Vec3 d{world_point[0] - camera_pose.position[0],
               world_point[1] - camera_pose.position[1],
               world_point[2] - camera_pose.position[2]};
  const Vec3 body = quat_rotate(camera_pose.orientation.conjugate(), d);
  if (body[0] <= 1e-9) return std::nullopt;  // behind the camera plane
  const double u = intrinsics.cx + intrinsics.f * (-body[1] / body[0]);
  const double v = intrinsics.cy + intrinsics.f * (-body[2] / body[0]);
  if (u < 0.0 || u >= intrinsics.width || v < 0.0 || v >= intrinsics.height)
    return std::nullopt;
  return std::array<double, 2>{u, v};
}

std::vector<std::uint8_t> render(const CameraIntrinsics& intrinsics,
                                 const SceneConfig& config,
                                 const Pose& observer, const Pose& target,
                                 std::uint16_t group_id) {
  if (!finite_pose(observer) || !finite_pose(target))
    throw NumericError("render: non-finite pose");

  const auto rot = quat_to_matrix(observer.orientation);
  const Vec3 o = observer.position;
  const Vec3 bc = target.position;  // billboard centroid
  const double yaw_t = euler_from_quat(target.orientation).yaw;
  const double yaw_o = euler_from_quat(observer.orientation).yaw;
  const double phi_view = wrap_angle(yaw_t - yaw_o);
  const Vec3 n{std::cos(yaw_t), std::sin(yaw_t), 0.0};
  const Vec3 t{-std::sin(yaw_t), std::cos(yaw_t), 0.0};

  // shade one ray through image point (uu, vv), body frame (x fwd, y left,
  // z up)
  auto shade = [&](double uu, double vv) {
    const double by = -(uu - intrinsics.cx) / intrinsics.f;
    const double bz = -(vv - intrinsics.cy) / intrinsics.f;
    const Vec3 d{rot[0] + rot[1] * by + rot[2] * bz,
                 rot[3] + rot[4] * by + rot[5] * bz,
                 rot[6] + rot[7] * by + rot[8] * bz};

    double best_s = std::numeric_limits<double>::infinity();
    double intensity = config.sky_tone;

    const double denom = n[0] * d[0] + n[1] * d[1] + n[2] * d[2];
    if (std::abs(denom) > 1e-12) {
      const double sb = (n[0] * (bc[0] - o[0]) + n[1] * (bc[1] - o[1]) +
                         n[2] * (bc[2] - o[2])) /
                        denom;
      if (sb > 1e-9) {
        const Vec3 p{o[0] + sb * d[0], o[1] + sb * d[1], o[2] + sb * d[2]};
        const double hn = (t[0] * (p[0] - bc[0]) + t[1] * (p[1] - bc[1])) /
                          config.billboard_w;
        const double vn = (p[2] - bc[2]) / config.billboard_h;
        if (std::abs(hn) <= 0.5 && std::abs(vn) <= 0.5) {
          best_s = sb;
          intensity = billboard_intensity(group_id, hn, vn, phi_view);
        }
      }
    }

    if (d[2] < -1e-12) {
      const double sg = (config.ground_z - o[2]) / d[2];
      if (sg > 0.0 && sg < best_s) {
        const double gx = o[0] + sg * d[0];
        const double gy = o[1] + sg * d[1];
        const long long ix =
            static_cast<long long>(std::floor(gx / config.checker_period));
        const long long iy =
            static_cast<long long>(std::floor(gy / config.checker_period));
        intensity = ((ix + iy) & 1) ? config.ground_tone_b
                                    : config.ground_tone_a;
      }
    }
    return intensity;
  };

  std::vector<std::uint8_t> img(std::size_t(intrinsics.height) *
                                intrinsics.width);
  for (int v = 0; v < intrinsics.height; ++v) {
    for (int u = 0; u < intrinsics.width; ++u) {
      // 2x2 supersampling; the subpixel offsets are symmetric about the
      // pixel center, so mirrored scenes render mirror-exactly
      const double intensity =
          0.25 * (shade(u + 0.25, v + 0.25) + shade(u + 0.75, v + 0.25) +
                  shade(u + 0.25, v + 0.75) + shade(u + 0.75, v + 0.75));
      img[std::size_t(v) * intrinsics.width + u] = static_cast<std::uint8_t>(
          std::clamp(std::lround(intensity), 0L, 255L));
    }
  }
  return img;
}

Dataset generate_dataset(const SceneConfig& config,
                         const CameraIntrinsics& intrinsics, std::uint32_t n,
                         GenerateStats* stats) {
  Dataset ds;
  const bool with_roll = config.state_schema == "pitch_roll";
  ds.header.n_samples = n;
  ds.header.height = static_cast<std::uint16_t>(intrinsics.height);
  ds.header.width = static_cast<std::uint16_t>(intrinsics.width);
  ds.header.state_dim = with_roll ? 2 : 1;
  ds.header.label_dim = 4;
  ds.header.n_groups = static_cast<std::uint16_t>(config.n_groups);
  ds.state_schema = with_roll ? std::vector<std::string>{"pitch", "roll"}
                              : std::vector<std::string>{"pitch"};
  ds.samples.reserve(n);

  GenerateStats local;
  for (std::uint32_t i = 0; i < n; ++i) {
    ScenePoses sp;
    std::uint32_t attempt = 0;
    for (;; ++attempt) {
      if (attempt >= 10000)
        throw NumericError("generate_dataset: no visible pose after 10000 draws");
      sp = sample_scene(config, i, attempt);
      if (project_point(intrinsics, sp.observer, sp.target.position))
        break;
      ++local.discarded;
    }
    Sample s;
    s.image = render(intrinsics, config, sp.observer, sp.target, sp.group_id);
    const auto lab = relative_pose_base_frame(sp.observer, sp.target);
    s.label = {float(lab[0]), float(lab[1]), float(lab[2]), float(lab[3])};
    s.state = with_roll ? std::vector<float>{float(sp.pitch), float(sp.roll)}
                        : std::vector<float>{float(sp.pitch)};
    s.group_id = sp.group_id;
    ds.samples.push_back(std::move(s));
  }
  if (stats) *stats = local;
  return ds;
}

}  // namespace vsf
