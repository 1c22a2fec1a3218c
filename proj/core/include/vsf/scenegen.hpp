#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vsf/dataset.hpp"
#include "vsf/poses.hpp"

namespace vsf {

/// Pinhole model. Body axes are x forward, y left, z up; pixel u grows to
/// the right (-y), v grows downward (-z).
struct CameraIntrinsics {
  double f = 64.0;   // focal length, pixels
  double cx = 32.0;  // principal point
  double cy = 32.0;
  int width = 64;
  int height = 64;
};

struct Range {
  double lo = 0.0, hi = 0.0;
};

/// Deterministic synthetic world configuration. Angle ranges in radians.
struct SceneConfig {
  Range x{1.0, 3.0};          // target relative position, meters
  Range y{-1.0, 1.0};
  Range z{-0.5, 0.5};
  Range phi{-1.5707963267948966, 1.5707963267948966};
  Range pitch{-0.29670597283903605, 0.29670597283903605};  // +/-17 deg
  Range roll{-0.08726646259971647, 0.08726646259971647};   // +/-5 deg
  Range observer_xy{-5.0, 5.0};
  Range observer_z{-0.3, 0.3};
  double ground_z = -1.5;        // world z of the ground plane
  double checker_period = 0.5;   // meters
  double billboard_w = 0.45;     // meters
  double billboard_h = 1.7;
  std::uint8_t sky_tone = 104;
  std::uint8_t ground_tone_a = 100;
  std::uint8_t ground_tone_b = 108;
  std::uint64_t seed = 1;
  int n_groups = 1;
  std::string state_schema = "pitch";  // "pitch" or "pitch_roll"
};

struct ScenePoses {
  Pose observer;
  Pose target;
  std::uint16_t group_id = 0;
  double pitch = 0.0;  // observer attitude channels, for the state vector
  double roll = 0.0;
};

/// Deterministic function of (config.seed, index). `attempt` advances the
/// per-index stream when a draw was discarded for visibility.
ScenePoses sample_scene(const SceneConfig& config, std::uint64_t index,
                        std::uint32_t attempt = 0);

/// Pinhole projection of a world point through a camera at `camera_pose`.
/// Returns (u, v) or nullopt when the point is behind the camera or
/// projects outside the image bounds.
std::optional<std::array<double, 2>> project_point(
    const CameraIntrinsics& intrinsics, const Pose& camera_pose,
    const Vec3& world_point);

/// Inverse-mapping rasterizer: billboard, checkered ground plane, uniform
/// sky. Nearest-neighbor pattern sampling, 8-bit output. Throws
/// NumericError on non-finite poses.
std::vector<std::uint8_t> render(const CameraIntrinsics& intrinsics,
                                 const SceneConfig& config,
                                 const Pose& observer, const Pose& target,
                                 std::uint16_t group_id);

struct GenerateStats {
  std::uint32_t discarded = 0;  // out-of-view draws that were resampled
};

/// Composes sampling, rendering, and base-frame labeling. Out-of-view
/// target centroids are resampled within the same per-index stream.
Dataset generate_dataset(const SceneConfig& config,
                         const CameraIntrinsics& intrinsics, std::uint32_t n,
                         GenerateStats* stats = nullptr);

}  // namespace vsf
