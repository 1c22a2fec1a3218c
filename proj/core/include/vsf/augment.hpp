#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vsf/dataset.hpp"
#include "vsf/rng.hpp"
#include "vsf/scenegen.hpp"

namespace vsf {

using Image = std::vector<std::uint8_t>;

/// Offline augmentation parameters; each field is a sampling range.
struct AugmentConfig {
  Range exposure{0.7, 1.3};
  Range gamma{0.6, 1.6};
  Range range_lo{0.0, 30.0};    // dynamic-range remap lower bound
  Range range_hi{225.0, 255.0};
  Range noise_sigma{0.0, 8.0};  // 8-bit intensity scale
  Range blur_sigma{0.0, 1.5};   // pixels
  Range vignette{0.0, 0.4};
  double flip_prob = 0.5;
  double pitch_range = 0.29670597283903605;  // +/-17 deg, radians
  int copies = 10;
  std::uint64_t seed = 1;
};

// Photometric ops. All map [0,255] into [0,255].
Image apply_gamma(const Image& img, double gamma);
Image apply_exposure(const Image& img, double gain);
Image apply_range(const Image& img, double lo, double hi);
Image add_noise(const Image& img, double sigma, SplitMix64& rng);
Image blur(const Image& img, int width, int height, double sigma);
Image vignette(const Image& img, int width, int height, double strength);

/// Mirrors image columns; negates the y and phi label channels and the
/// roll state channel. An involution.
Sample hflip(const Sample& sample, int width, int height);

/// Pure-rotation homography warp of `delta` radians about the camera
/// pitch axis; bilinear sampling with edge replication. State pitch is
/// shifted by delta, labels are untouched. Returns nullopt when the
/// target centroid leaves the field of view. State channel 0 must be
/// pitch; channel 1, when present, is roll.
std::optional<Sample> pitch_warp(const Sample& sample, double delta,
                                 const CameraIntrinsics& intrinsics);

/// Draws per-copy parameters from a per-(sample,copy) stream and applies
/// photometric ops, vignette, flip, then pitch_warp. Discarded copies are
/// dropped.
std::vector<Sample> augment_pipeline(const Sample& sample,
                                     std::uint64_t sample_index,
                                     const AugmentConfig& config,
                                     const CameraIntrinsics& intrinsics);

/// Applies augment_pipeline to every sample of a dataset.
Dataset augment_dataset(const Dataset& ds, const AugmentConfig& config,
                        const CameraIntrinsics& intrinsics,
                        std::uint32_t* discarded = nullptr);

}  // namespace vsf
