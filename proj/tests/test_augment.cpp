#include <cmath>
#include <numeric>

#include "doctest.h"
#include "vsf/augment.hpp"

using namespace vsf;

namespace {

constexpr double kPi = 3.14159265358979323846;

Image random_image(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image img(n);
  for (auto& px : img) px = std::uint8_t(rng.uniform_u64(256));
  return img;
}

Sample make_scene_sample(const CameraIntrinsics& in, const SceneConfig& cfg,
                         std::uint64_t index) {
  std::uint32_t attempt = 0;
  ScenePoses sp = sample_scene(cfg, index, attempt);
  while (!project_point(in, sp.observer, sp.target.position))
    sp = sample_scene(cfg, index, ++attempt);
  Sample s;
  s.image = render(in, cfg, sp.observer, sp.target, sp.group_id);
  const auto lab = relative_pose_base_frame(sp.observer, sp.target);
  s.label = {float(lab[0]), float(lab[1]), float(lab[2]), float(lab[3])};
  s.state = {float(sp.pitch), float(sp.roll)};
  s.group_id = sp.group_id;
  return s;
}

// brute-force dense convolution with the normalized truncated Gaussian
double blur_oracle_at(const Image& img, int w, int h, int cx, int cy,
                      double sigma) {
  const int radius = int(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ksum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    ksum += k[i + radius];
  }
  for (auto& v : k) v /= ksum;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
    return i;
  };
  double acc = 0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      acc += k[dy + radius] * k[dx + radius] *
             img[reflect(cy + dy, h) * w + reflect(cx + dx, w)];
  return acc;
}

}  // namespace

TEST_CASE("photometric identities") {
  const Image img = random_image(64 * 64, 31);
  CHECK(apply_gamma(img, 1.0) == img);
  CHECK(apply_exposure(img, 1.0) == img);
  CHECK(apply_range(img, 0.0, 255.0) == img);
  SplitMix64 rng(1);
  CHECK(add_noise(img, 0.0, rng) == img);
  CHECK(blur(img, 64, 64, 0.0) == img);
  CHECK(vignette(img, 64, 64, 0.0) == img);
}

TEST_CASE("gamma closed-form values") {
  Image img{255, 64, 0};
  const Image g2 = apply_gamma(img, 2.0);
  CHECK(g2[0] == 255);  // fixed point
  CHECK(g2[1] == 16);   // round(255*(64/255)^2)
  CHECK(g2[2] == 0);
}

TEST_CASE("photometric ops stay in [0,255]") {
  const Image img = random_image(32 * 32, 33);
  SplitMix64 rng(2);
  for (const Image& out :
       {apply_gamma(img, 0.4), apply_exposure(img, 2.5),
        apply_range(img, 30, 225), add_noise(img, 20, rng),
        blur(img, 32, 32, 2.0), vignette(img, 32, 32, 0.9)}) {
    CHECK(out.size() == img.size());
    // values are uint8 by type; check the op produced plausible output
    CHECK(std::accumulate(out.begin(), out.end(), 0) >= 0);
  }
}

TEST_CASE("vignette corner attenuation") {
  Image img(64 * 64, 200);
  const Image out = vignette(img, 64, 64, 0.4);
  // farthest corner scaled by exactly 1 - strength
  CHECK(out[0] == std::uint8_t(std::lround(200 * 0.6)));
  // center untouched
  const int c = 31 * 64 + 31;
  CHECK(out[c] >= 199);
}

TEST_CASE("blur matches a brute-force convolution oracle") {
  SUBCASE("delta image") {
    Image img(33 * 33, 0);
    img[16 * 33 + 16] = 255;
    const double sigma = 1.0;
    const Image out = blur(img, 33, 33, sigma);
    const double peak = blur_oracle_at(img, 33, 33, 16, 16, sigma);
    CHECK(std::abs(double(out[16 * 33 + 16]) - peak) <= 1.0);
  }
  SUBCASE("random image, random pixels") {
    const Image img = random_image(40 * 40, 34);
    const double sigma = 1.3;
    const Image out = blur(img, 40, 40, sigma);
    SplitMix64 rng(3);
    for (int t = 0; t < 30; ++t) {
      const int x = int(rng.uniform_u64(40)), y = int(rng.uniform_u64(40));
      const double want = blur_oracle_at(img, 40, 40, x, y, sigma);
      CHECK(std::abs(double(out[y * 40 + x]) - want) <= 1.0);
    }
  }
}

TEST_CASE("hflip transforms and involution") {
  const CameraIntrinsics in;
  SceneConfig cfg;
  const Sample s = make_scene_sample(in, cfg, 5);

  const Sample f = hflip(s, in.width, in.height);
  CHECK(f.label[0] == s.label[0]);
  CHECK(f.label[1] == -s.label[1]);
  CHECK(f.label[2] == s.label[2]);
  CHECK(f.label[3] == -s.label[3]);
  CHECK(f.state[0] == s.state[0]);   // pitch unchanged
  CHECK(f.state[1] == -s.state[1]);  // roll negated

  const Sample ff = hflip(f, in.width, in.height);
  CHECK(ff.image == s.image);
  CHECK(ff.label == s.label);
  CHECK(ff.state == s.state);

  // stated transform on a literal label
  Sample lit = s;
  lit.label = {2.0f, 0.5f, 0.1f, 0.3f};
  const Sample flit = hflip(lit, in.width, in.height);
  CHECK(flit.label[0] == 2.0f);
  CHECK(flit.label[1] == -0.5f);
  CHECK(flit.label[2] == 0.1f);
  CHECK(flit.label[3] == -0.3f);
}

TEST_CASE("hflip agrees with rendering the mirrored scene") {
  // Renderer-as-oracle on a mirror-symmetric sub-scene. The checkerboard
  // and the billboard pattern are deliberately chiral (the network must
  // see the sign of phi), so the oracle uses a uniform ground and keeps
  // the billboard out of view; the mirror negates observer y, roll, yaw.
  const CameraIntrinsics in;
  SceneConfig cfg;
  cfg.ground_tone_b = cfg.ground_tone_a;  // achiral ground

  Pose tgt;
  tgt.position = {-50, 0, 0};  // behind the camera

  SplitMix64 rng(41);
  for (int t = 0; t < 5; ++t) {
    const double roll = rng.uniform(-0.08, 0.08);
    const double pitch = rng.uniform(-0.25, 0.25);
    const double yaw = rng.uniform(-1.0, 1.0);
    Pose obs;
    obs.position = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                    rng.uniform(-0.3, 0.3)};
    obs.orientation = quat_from_euler(roll, pitch, yaw);

    Pose obs_m;
    obs_m.position = {obs.position[0], -obs.position[1], obs.position[2]};
    obs_m.orientation = quat_from_euler(-roll, pitch, -yaw);

    Sample s;
    s.image = render(in, cfg, obs, tgt, 0);
    s.state = {0, 0};
    s.label = {0, 0, 0, 0};
    const Sample flipped = hflip(s, in.width, in.height);
    const auto img_m = render(in, cfg, obs_m, tgt, 0);

    int max_diff = 0;
    for (std::size_t k = 0; k < img_m.size(); ++k)
      max_diff = std::max(
          max_diff, std::abs(int(flipped.image[k]) - int(img_m[k])));
    CHECK(max_diff <= 1);
  }
}

TEST_CASE("billboard stripe side encodes the sign of phi") {
  const CameraIntrinsics in;
  SceneConfig cfg;
  Pose obs;
  Pose tgt_pos, tgt_neg;
  tgt_pos.position = {2, 0, 0};
  tgt_neg.position = {2, 0, 0};
  tgt_pos.orientation = quat_from_euler(0, 0, 0.6);
  tgt_neg.orientation = quat_from_euler(0, 0, -0.6);
  const auto img_pos = render(in, cfg, obs, tgt_pos, 0);
  const auto img_neg = render(in, cfg, obs, tgt_neg, 0);
  CHECK(img_pos != img_neg);
}

TEST_CASE("pitch_warp invariants") {
  const CameraIntrinsics in;
  SceneConfig cfg;
  const Sample s = make_scene_sample(in, cfg, 7);

  SUBCASE("delta 0 is the identity up to one level") {
    const auto w = pitch_warp(s, 0.0, in);
    REQUIRE(w.has_value());
    int max_diff = 0;
    for (std::size_t k = 0; k < s.image.size(); ++k)
      max_diff = std::max(max_diff,
                          std::abs(int(w->image[k]) - int(s.image[k])));
    CHECK(max_diff <= 1);
    CHECK(w->label == s.label);
    CHECK(w->state[0] == s.state[0]);
  }

  SUBCASE("labels bit-unchanged, only pitch state moves") {
    const double delta = 3.0 * kPi / 180;
    const auto w = pitch_warp(s, delta, in);
    REQUIRE(w.has_value());
    CHECK(w->label == s.label);
    CHECK(w->state[0] == doctest::Approx(s.state[0] + float(delta)));
    CHECK(w->state[1] == s.state[1]);
    CHECK(w->group_id == s.group_id);
  }

  SUBCASE("large delta discards when the target leaves the view") {
    // pitch far enough that the billboard centroid exits the frame
    bool discarded = false;
    for (double d = 0.1; d <= 0.9; d += 0.05)
      if (!pitch_warp(s, d, in).has_value()) {
        discarded = true;
        break;
      }
    CHECK(discarded);
  }
}

TEST_CASE("pitch_warp matches a fresh render at shifted pitch") {
  const CameraIntrinsics in;
  SceneConfig cfg;
  std::uint32_t attempt = 0;
  ScenePoses sp = sample_scene(cfg, 13, attempt);
  while (!project_point(in, sp.observer, sp.target.position))
    sp = sample_scene(cfg, 13, ++attempt);

  Sample s;
  s.image = render(in, cfg, sp.observer, sp.target, sp.group_id);
  const auto lab = relative_pose_base_frame(sp.observer, sp.target);
  s.label = {float(lab[0]), float(lab[1]), float(lab[2]), float(lab[3])};
  s.state = {float(sp.pitch), float(sp.roll)};

  const double delta = 5.0 * kPi / 180;
  const auto w = pitch_warp(s, delta, in);
  REQUIRE(w.has_value());

  const EulerZYX e = euler_from_quat(sp.observer.orientation);
  Pose obs2 = sp.observer;
  obs2.orientation = quat_from_euler(e.roll, e.pitch + delta, e.yaw);
  const auto fresh = render(in, cfg, obs2, sp.target, sp.group_id);

  // interior pixels only: skip a border where edge replication applies
  double mad = 0;
  int count = 0;
  for (int r = 8; r < in.height - 8; ++r)
    for (int c = 8; c < in.width - 8; ++c) {
      mad += std::abs(int(w->image[r * in.width + c]) -
                      int(fresh[r * in.width + c]));
      ++count;
    }
  mad /= count * 255.0;
  INFO("interior mean absolute difference: ", mad);
  CHECK(mad < 3.0 / 255.0);
}

TEST_CASE("augment_pipeline identity config and determinism") {
  const CameraIntrinsics in;
  SceneConfig cfg;
  const Sample s = make_scene_sample(in, cfg, 17);

  AugmentConfig ac;
  ac.exposure = {1, 1};
  ac.gamma = {1, 1};
  ac.range_lo = {0, 0};
  ac.range_hi = {255, 255};
  ac.noise_sigma = {0, 0};
  ac.blur_sigma = {0, 0};
  ac.vignette = {0, 0};
  ac.flip_prob = 0;
  ac.pitch_range = 0;
  ac.copies = 4;

  const auto copies = augment_pipeline(s, 17, ac, in);
  REQUIRE(copies.size() == 4);
  for (const auto& c : copies) {
    CHECK(c.image == s.image);
    CHECK(c.label == s.label);
    CHECK(c.state == s.state);
  }

  AugmentConfig full;  // defaults: everything active
  full.seed = 99;
  const auto a1 = augment_pipeline(s, 17, full, in);
  const auto a2 = augment_pipeline(s, 17, full, in);
  REQUIRE(a1.size() == a2.size());
  CHECK(a1.size() <= std::size_t(full.copies));
  for (std::size_t i = 0; i < a1.size(); ++i) {
    CHECK(a1[i].image == a2[i].image);
    CHECK(a1[i].state == a2[i].state);
    CHECK(a1[i].label == a2[i].label);
    // labels differ from the input only via flip
    CHECK(a1[i].label[0] == s.label[0]);
    CHECK(a1[i].label[2] == s.label[2]);
    CHECK(std::abs(a1[i].label[1]) == std::abs(s.label[1]));
  }
}
