#include <cmath>
#include <vector>

#include "doctest.h"
#include "net_detail.hpp"
#include "vsf/errors.hpp"
#include "vsf/quant.hpp"
#include "vsf/rng.hpp"

using namespace vsf;

namespace {

void random_batch(std::vector<float>& img, std::vector<float>& st, int n,
                  std::uint64_t seed) {
  SplitMix64 rng(seed);
  img.resize(std::size_t(n) * 64 * 64);
  st.resize(n);
  for (auto& v : img) v = float(int(rng.uniform_u64(256)) - 128) / 128.0f;
  for (auto& v : st) v = float(rng.uniform(-0.3, 0.3));
}

}  // namespace

TEST_CASE("weight dequantization round-trip error is within scale/2") {
  Model<float> m(desknet_arch(), FusionVariant::MlpBranch, 1, 3);
  std::vector<float> img, st;
  random_batch(img, st, 8, 91);
  const QuantModel qm = quantize(m, img, st, 8);
  auto& net = qm.folded.net();
  REQUIRE(qm.conv_weights.size() == net.blocks.size());
  for (std::size_t b = 0; b < net.blocks.size(); ++b) {
    const auto& w = net.blocks[b].conv.w;
    const auto& cw = qm.conv_weights[b];
    REQUIRE(cw.q.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float deq = cw.scale * float(cw.q[i]);
      CHECK(std::abs(deq - w[i]) <= cw.scale * 0.5f + 1e-9f);
    }
  }
}

TEST_CASE("q_forward equals float forward for grid-representable weights") {
  Model<float> m(desknet_arch(), FusionVariant::Stateless, 1, 4);
  Model<float> folded = m.fold_batchnorm();
  // snap every conv weight exactly onto its int8 grid
  auto& net = folded.net();
  for (auto& blk : net.blocks) {
    float amax = 0;
    for (float v : blk.conv.w) amax = std::max(amax, std::abs(v));
    const float s = amax / 127.0f;
    for (auto& v : blk.conv.w) v = s * std::round(v / s);
  }
  std::vector<float> img, st;
  random_batch(img, st, 16, 92);
  const QuantModel qm = quantize(folded, img, st, 16);

  const auto qf = q_forward(qm, img, st, 16);
  auto fl = folded.forward(img, st, 16, RunMode::Eval);
  REQUIRE(qf.size() == fl.size());
  // activations still pass through the uint8 grid; compare within the
  // worst-case accumulated activation quantization step
  float max_step = 0;
  for (const auto& r : qm.act_ranges) max_step = std::max(max_step, r.scale());
  for (std::size_t i = 0; i < qf.size(); ++i)
    CHECK(std::abs(qf[i] - fl[i]) < 60.0f * max_step);
}

TEST_CASE("quantized outputs approximate float outputs") {
  SplitMix64 rng(93);
  Model<float> m(desknet_arch(), FusionVariant::MlpBranch, 1, 5);
  std::vector<float> img, st;
  random_batch(img, st, 32, 94);
  const QuantModel qm = quantize(m, img, st, 32);
  const auto qf = q_forward(qm, img, st, 32);
  const auto fl = m.forward(img, st, 32, RunMode::Eval);
  double mad = 0;
  for (std::size_t i = 0; i < qf.size(); ++i) mad += std::abs(qf[i] - fl[i]);
  mad /= double(qf.size());
  // freshly initialized net outputs are O(1); int8 noise stays small
  CHECK(mad < 0.2);
}

TEST_CASE("degenerate calibration falls back to scale 1") {
  ActRange r;  // min == max == 0
  CHECK(r.scale() == 1.0f);
  CHECK(r.zero_point() == 0);
}

TEST_CASE("quantize rejects an empty calibration batch") {
  Model<float> m(desknet_arch(), FusionVariant::Stateless, 1, 6);
  std::vector<float> img, st;
  CHECK_THROWS_AS(quantize(m, img, st, 0), NumericError);
}
