#include "vsf/augment.hpp"

#include <algorithm>
#include <cmath>

#include "vsf/errors.hpp"
#include "vsf/poses.hpp"

namespace vsf {

namespace {

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

int reflect(int i, int n) {
  // reflect-101 style padding without repeating the edge sample twice
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

/// Bilinear lookup with edge replication outside the source.
double sample_bilinear(const Image& img, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double a = img[std::size_t(y0) * w + x0];
  const double b = img[std::size_t(y0) * w + x1];
  const double c = img[std::size_t(y1) * w + x0];
  const double d = img[std::size_t(y1) * w + x1];
  return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
}

}  // namespace

Image apply_gamma(const Image& img, double gamma) {
  Image out(img.size());
  // 256-entry LUT; input domain is exactly the 8-bit grid
  std::uint8_t lut[256];
  for (int i = 0; i < 256; ++i)
    lut[i] = clamp8(255.0 * std::pow(i / 255.0, gamma));
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = lut[img[i]];
  return out;
}

Image apply_exposure(const Image& img, double gain) {
  Image out(img.size());
  std::uint8_t lut[256];
  for (int i = 0; i < 256; ++i) lut[i] = clamp8(gain * i);
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = lut[img[i]];
  return out;
}

Image apply_range(const Image& img, double lo, double hi) {
  Image out(img.size());
  std::uint8_t lut[256];
  for (int i = 0; i < 256; ++i) lut[i] = clamp8(lo + i * (hi - lo) / 255.0);
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = lut[img[i]];
  return out;
}

Image add_noise(const Image& img, double sigma, SplitMix64& rng) {
  Image out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    out[i] = clamp8(img[i] + sigma * rng.normal());
  return out;
}

Image blur(const Image& img, int width, int height, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  std::vector<double> tmp(img.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] *
               img[std::size_t(y) * width + reflect(x + i, width)];
      tmp[std::size_t(y) * width + x] = acc;
    }
  Image out(img.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] *
               tmp[std::size_t(reflect(y + i, height)) * width + x];
      out[std::size_t(y) * width + x] = clamp8(acc);
    }
  return out;
}

Image vignette(const Image& img, int width, int height, double strength) {
  Image out(img.size());
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  const double rmax2 = cx * cx + cy * cy;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      const double factor = 1.0 - strength * (r2 / rmax2);
      out[std::size_t(y) * width + x] =
          clamp8(factor * img[std::size_t(y) * width + x]);
    }
  return out;
}

Sample hflip(const Sample& sample, int width, int height) {
  Sample out = sample;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.image[std::size_t(y) * width + x] =
          sample.image[std::size_t(y) * width + (width - 1 - x)];
  if (out.label.size() >= 4) {
    out.label[1] = -out.label[1];
    out.label[3] = -out.label[3];
  }
  if (out.state.size() >= 2) out.state[1] = -out.state[1];  // roll
  return out;
}

std::optional<Sample> pitch_warp(const Sample& sample, double delta,
                                 const CameraIntrinsics& intrinsics) {
  const int w = intrinsics.width, h = intrinsics.height;
  const double pitch = sample.state.empty() ? 0.0 : sample.state[0];
  const double roll = sample.state.size() >= 2 ? sample.state[1] : 0.0;
  const double new_pitch = pitch + delta;

  // visibility of the target centroid from the re-pitched camera
  const Vec3 p_base{sample.label[0], sample.label[1], sample.label[2]};
  Pose camera;  // base frame origin, attitude only
  camera.orientation = quat_from_euler(roll, new_pitch, 0.0);
  if (!project_point(intrinsics, camera, p_base)) return std::nullopt;

  // src_dir = Rx(-roll) * Ry(delta) * Rx(roll) * dest_dir, body frame
  const Quaternion rot = quat_from_euler(roll, 0.0, 0.0).conjugate() *
                         quat_from_euler(0.0, delta, 0.0) *
                         quat_from_euler(roll, 0.0, 0.0);
  const auto m = quat_to_matrix(rot);

  Sample out = sample;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      // pixel-center rays, matching the renderer's convention
      const Vec3 dd{1.0, -(u + 0.5 - intrinsics.cx) / intrinsics.f,
                    -(v + 0.5 - intrinsics.cy) / intrinsics.f};
      const Vec3 sd{m[0] * dd[0] + m[1] * dd[1] + m[2] * dd[2],
                    m[3] * dd[0] + m[4] * dd[1] + m[5] * dd[2],
                    m[6] * dd[0] + m[7] * dd[1] + m[8] * dd[2]};
      const double su = intrinsics.cx - intrinsics.f * sd[1] / sd[0] - 0.5;
      const double sv = intrinsics.cy - intrinsics.f * sd[2] / sd[0] - 0.5;
      out.image[std::size_t(v) * w + u] =
          clamp8(sample_bilinear(sample.image, w, h, su, sv));
    }
  out.state[0] = float(new_pitch);
  return out;
}

std::vector<Sample> augment_pipeline(const Sample& sample,
                                     std::uint64_t sample_index,
                                     const AugmentConfig& config,
                                     const CameraIntrinsics& intrinsics) {
  std::vector<Sample> out;
  out.reserve(config.copies);
  const int w = intrinsics.width, h = intrinsics.height;
  for (int copy = 0; copy < config.copies; ++copy) {
    SplitMix64 rng = SplitMix64::stream(
        config.seed, sample_index * 0x10000ULL + std::uint64_t(copy));
    const double gain = rng.uniform(config.exposure.lo, config.exposure.hi);
    const double gamma = rng.uniform(config.gamma.lo, config.gamma.hi);
    const double lo = rng.uniform(config.range_lo.lo, config.range_lo.hi);
    const double hi = rng.uniform(config.range_hi.lo, config.range_hi.hi);
    const double nsig = rng.uniform(config.noise_sigma.lo, config.noise_sigma.hi);
    const double bsig = rng.uniform(config.blur_sigma.lo, config.blur_sigma.hi);
    const double vstr = rng.uniform(config.vignette.lo, config.vignette.hi);
    const bool flip = rng.uniform() < config.flip_prob;
    const double delta = rng.uniform(-config.pitch_range, config.pitch_range);

    Sample s = sample;
    if (gain != 1.0) s.image = apply_exposure(s.image, gain);
    if (gamma != 1.0) s.image = apply_gamma(s.image, gamma);
    if (lo != 0.0 || hi != 255.0) s.image = apply_range(s.image, lo, hi);
    if (nsig > 0.0) s.image = add_noise(s.image, nsig, rng);
    s.image = blur(s.image, w, h, bsig);
    if (vstr > 0.0) s.image = vignette(s.image, w, h, vstr);
    if (flip) s = hflip(s, w, h);
    if (auto warped = pitch_warp(s, delta, intrinsics))
      out.push_back(std::move(*warped));
  }
  return out;
}

Dataset augment_dataset(const Dataset& ds, const AugmentConfig& config,
                        const CameraIntrinsics& intrinsics,
                        std::uint32_t* discarded) {
  if (ds.header.state_dim < 1)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "pitch augmentation needs a pitch state channel");
  Dataset out;
  out.header = ds.header;
  out.state_schema = ds.state_schema;
  std::uint32_t dropped = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    auto copies = augment_pipeline(ds.samples[i], i, config, intrinsics);
    dropped += std::uint32_t(config.copies - copies.size());
    for (auto& c : copies) out.samples.push_back(std::move(c));
  }
  out.header.n_samples = std::uint32_t(out.samples.size());
  if (discarded) *discarded = dropped;
  return out;
}

}  // namespace vsf
