#include "vsf/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "net_detail.hpp"
#include "vsf/errors.hpp"

namespace vsf {

namespace {

void observe(const std::vector<float>& x, ActRange& r) {
  float lo = 0.0f, hi = 0.0f;
  for (float v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  r.expand(lo, hi);
}

std::vector<std::uint8_t> quantize_acts(const std::vector<float>& x,
                                        const ActRange& r) {
  const float s = r.scale();
  const int zp = r.zero_point();
  std::vector<std::uint8_t> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    q[i] = std::uint8_t(std::clamp(int(std::lround(x[i] / s)) + zp, 0, 255));
  return q;
}

/// Assembles the network input planes (image + optional constant state
/// channels) exactly like Model::forward does.
std::vector<float> assemble_input(const detail::NetImpl<float>& net,
                                  const std::vector<float>& images,
                                  const std::vector<float>& states, int N) {
  const std::size_t plane = std::size_t(net.arch.in_h) * net.arch.in_w;
  const int in_ch = net.blocks.front().conv.in_ch;
  std::vector<float> x0(std::size_t(N) * in_ch * plane);
  for (int n = 0; n < N; ++n) {
    std::memcpy(x0.data() + std::size_t(n) * in_ch * plane,
                images.data() + std::size_t(n) * plane, plane * sizeof(float));
    for (int c = 1; c < in_ch; ++c) {
      const float v = states[std::size_t(n) * net.state_dim + (c - 1)];
      std::fill_n(x0.data() + (std::size_t(n) * in_ch + c) * plane, plane, v);
    }
  }
  return x0;
}

std::vector<float> fc_forward(const detail::FCLayer<float>& fc,
                              const std::vector<float>& x, int N) {
  std::vector<float> y(std::size_t(N) * fc.out);
  for (int n = 0; n < N; ++n) {
    const float* xi = x.data() + std::size_t(n) * fc.in;
    float* yo = y.data() + std::size_t(n) * fc.out;
    for (int o = 0; o < fc.out; ++o) {
      const float* w = fc.w.data() + std::size_t(o) * fc.in;
      float sum = fc.b[o];
      for (int i = 0; i < fc.in; ++i) sum += w[i] * xi[i];
      yo[o] = fc.relu_after ? std::max(sum, 0.0f) : sum;
    }
  }
  return y;
}

}  // namespace

QuantModel quantize(const Model<float>& model,
                    const std::vector<float>& calib_images,
                    const std::vector<float>& calib_states, int batch) {
  if (batch <= 0) throw NumericError("quantize: empty calibration batch");
  QuantModel qm{model.fold_batchnorm(), {}, {}};
  auto& net = qm.folded.net();

  for (auto& blk : net.blocks) {
    QuantConvWeights qw;
    float amax = 0.0f;
    for (float v : blk.conv.w) amax = std::max(amax, std::abs(v));
    qw.scale = amax > 0.0f ? amax / 127.0f : 1.0f;
    qw.q.resize(blk.conv.w.size());
    for (std::size_t i = 0; i < blk.conv.w.size(); ++i)
      qw.q[i] = std::int8_t(std::clamp(
          int(std::lround(blk.conv.w[i] / qw.scale)), -127, 127));
    qm.conv_weights.push_back(std::move(qw));
  }

  // min/max activation calibration over the float folded network
  qm.act_ranges.assign(net.blocks.size() + 1, ActRange{});
  std::vector<float> x =
      assemble_input(net, calib_images, calib_states, batch);
  observe(x, qm.act_ranges[0]);
  std::vector<float> y;
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    auto& blk = net.blocks[i];
    blk.conv.forward(x, batch, y);
    if (blk.has_relu)
      for (float& v : y) v = std::max(v, 0.0f);
    observe(y, qm.act_ranges[i + 1]);
    x = std::move(y);
    y.clear();
  }
  return qm;
}

std::vector<float> q_forward(const QuantModel& qm,
                             const std::vector<float>& images,
                             const std::vector<float>& states, int batch) {
  const auto& net = qm.folded.net();
  const int N = batch;

  std::vector<float> x0 = assemble_input(net, images, states, N);
  std::vector<std::uint8_t> qx = quantize_acts(x0, qm.act_ranges[0]);

  std::vector<std::uint8_t> qy;
  std::vector<float> feat;  // dequantized output of the last block
  for (std::size_t bi = 0; bi < net.blocks.size(); ++bi) {
    const auto& cv = net.blocks[bi].conv;
    const auto& qw = qm.conv_weights[bi];
    const ActRange& rin = qm.act_ranges[bi];
    const ActRange& rout = qm.act_ranges[bi + 1];
    const int zp_in = rin.zero_point();
    const float s_in = rin.scale();
    const float s_out = rout.scale();
    const int zp_out = rout.zero_point();
    const float requant = qw.scale * s_in;
    const int S = cv.spatial();

    std::vector<std::uint8_t> out(std::size_t(N) * cv.out_ch * S);
    std::vector<float> fout;
    const bool last = bi + 1 == net.blocks.size();
    if (last) fout.resize(out.size());

    for (int n = 0; n < N; ++n) {
      const std::uint8_t* xin =
          qx.data() + std::size_t(n) * cv.in_ch * cv.in_h * cv.in_w;
      for (int oc = 0; oc < cv.out_ch; ++oc) {
        const std::int8_t* wrow = qw.q.data() + std::size_t(oc) * cv.patch();
        for (int oy = 0; oy < cv.out_h; ++oy)
          for (int ox = 0; ox < cv.out_w; ++ox) {
            std::int32_t acc = 0;
            for (int ic = 0; ic < cv.in_ch; ++ic)
              for (int ki = 0; ki < cv.k; ++ki) {
                const int iy = oy * cv.stride - cv.pad + ki;
                if (iy < 0 || iy >= cv.in_h) continue;
                const std::uint8_t* src =
                    xin + (std::size_t(ic) * cv.in_h + iy) * cv.in_w;
                const std::int8_t* wr =
                    wrow + (std::size_t(ic) * cv.k + ki) * cv.k;
                for (int kj = 0; kj < cv.k; ++kj) {
                  const int ix = ox * cv.stride - cv.pad + kj;
                  if (ix < 0 || ix >= cv.in_w) continue;
                  acc += std::int32_t(wr[kj]) *
                         (std::int32_t(src[ix]) - zp_in);
                }
              }
            float v = requant * float(acc) + cv.b[oc];
            if (net.blocks[bi].has_relu) v = std::max(v, 0.0f);
            const std::size_t oidx =
                (std::size_t(n) * cv.out_ch + oc) * S + oy * cv.out_w + ox;
            if (last) {
              // keep the quantized grid but hand floats to the head
              const int q = std::clamp(
                  int(std::lround(v / s_out)) + zp_out, 0, 255);
              fout[oidx] = s_out * float(q - zp_out);
            } else {
              out[oidx] = std::uint8_t(std::clamp(
                  int(std::lround(v / s_out)) + zp_out, 0, 255));
            }
          }
      }
    }
    if (last)
      feat = std::move(fout);
    else
      qx = std::move(out);
  }

  // fusion + head, float
  const int F = net.features, E = net.extra;
  std::vector<float> extra;
  if (net.variant == FusionVariant::SingleNeuron ||
      net.variant == FusionVariant::FullyConnected) {
    extra = states;
  } else if (net.variant == FusionVariant::MlpBranch) {
    extra = fc_forward(net.mlp[1], fc_forward(net.mlp[0], states, N), N);
  }
  std::vector<float> h(std::size_t(N) * (F + E));
  for (int n = 0; n < N; ++n) {
    std::memcpy(h.data() + std::size_t(n) * (F + E),
                feat.data() + std::size_t(n) * F, F * sizeof(float));
    if (E > 0)
      std::memcpy(h.data() + std::size_t(n) * (F + E) + F,
                  extra.data() + std::size_t(n) * E, E * sizeof(float));
  }
  for (const auto& fc : net.head) h = fc_forward(fc, h, N);
  return h;
}

}  // namespace vsf
