#pragma once

// Internal layer machinery shared by nnet.cpp and quant.cpp. Not installed.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

#include "vsf/nnet.hpp"
#include "vsf/rng.hpp"

namespace vsf {

// ---------------------------------------------------------------------------
// GEMM kernels (row-major). The axpy-style inner loops auto-vectorize.

namespace detail {

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C,
             bool accumulate) {
  for (int m = 0; m < M; ++m) {
    T* __restrict c = C + std::size_t(m) * N;
    if (!accumulate) std::fill(c, c + N, T(0));
    const T* a = A + std::size_t(m) * K;
    for (int k = 0; k < K; ++k) {
      const T av = a[k];
      const T* __restrict b = B + std::size_t(k) * N;
      for (int n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_tn_acc(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int k = 0; k < K; ++k) {
    const T* a = A + std::size_t(k) * M;
    const T* __restrict b = B + std::size_t(k) * N;
    for (int m = 0; m < M; ++m) {
      const T av = a[m];
      T* __restrict c = C + std::size_t(m) * N;
      for (int n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// C[M,N] (+)= A[M,K] * B[N,K]^T. The fixed-width lane array makes the
// reduction vectorizable without reassociation flags.
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C,
             bool accumulate) {
  constexpr int L = 16;
  for (int m = 0; m < M; ++m) {
    const T* a = A + std::size_t(m) * K;
    for (int n = 0; n < N; ++n) {
      const T* b = B + std::size_t(n) * K;
      T acc[L] = {};
      int k = 0;
      for (; k + L <= K; k += L)
        for (int j = 0; j < L; ++j) acc[j] += a[k + j] * b[k + j];
      T sum = 0;
      for (; k < K; ++k) sum += a[k] * b[k];
      for (int j = 0; j < L; ++j) sum += acc[j];
      T* c = C + std::size_t(m) * N + n;
      *c = accumulate ? *c + sum : sum;
    }
  }
}

template <typename T>
void im2col(const T* x, int C, int H, int W, int k, int stride, int pad,
            int oh, int ow, T* cols) {
  const int S = oh * ow;
  for (int c = 0; c < C; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        T* row = cols + (std::size_t(c) * k * k + ki * k + kj) * S;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) {
            std::fill(row + oy * ow, row + (oy + 1) * ow, T(0));
            continue;
          }
          const T* src = x + (std::size_t(c) * H + iy) * W;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            row[oy * ow + ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_acc(const T* cols, int C, int H, int W, int k, int stride, int pad,
                int oh, int ow, T* dx) {
  const int S = oh * ow;
  for (int c = 0; c < C; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const T* row = cols + (std::size_t(c) * k * k + ki * k + kj) * S;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          T* dst = dx + (std::size_t(c) * H + iy) * W;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < W) dst[ix] += row[oy * ow + ox];
          }
        }
      }
}

// ---------------------------------------------------------------------------
// Layers

template <typename T>
struct ConvLayer {
  int in_ch, out_ch, k, stride, pad;
  int in_h, in_w, out_h, out_w;
  std::vector<T> w, b, gw, gb;  // w: [out_ch][in_ch*k*k]
  std::vector<T> cols;          // cached im2col, [N][K'][S]

  int patch() const { return in_ch * k * k; }
  int spatial() const { return out_h * out_w; }

  void forward(const std::vector<T>& x, int N, std::vector<T>& y) {
    const int K = patch(), S = spatial();
    cols.resize(std::size_t(N) * K * S);
    y.resize(std::size_t(N) * out_ch * S);
    for (int n = 0; n < N; ++n) {
      T* cn = cols.data() + std::size_t(n) * K * S;
      im2col(x.data() + std::size_t(n) * in_ch * in_h * in_w, in_ch, in_h,
             in_w, k, stride, pad, out_h, out_w, cn);
      T* yn = y.data() + std::size_t(n) * out_ch * S;
      gemm_nn(out_ch, S, K, w.data(), cn, yn, false);
      for (int c = 0; c < out_ch; ++c) {
        const T bias = b[c];
        T* row = yn + std::size_t(c) * S;
        for (int s = 0; s < S; ++s) row[s] += bias;
      }
    }
  }

  void backward(const std::vector<T>& dy, int N, std::vector<T>* dx) {
    const int K = patch(), S = spatial();
    std::vector<T> dcols(std::size_t(K) * S);
    if (dx) {
      dx->assign(std::size_t(N) * in_ch * in_h * in_w, T(0));
    }
    for (int n = 0; n < N; ++n) {
      const T* dyn = dy.data() + std::size_t(n) * out_ch * S;
      const T* cn = cols.data() + std::size_t(n) * K * S;
      gemm_nt(out_ch, K, S, dyn, cn, gw.data(), true);
      for (int c = 0; c < out_ch; ++c) {
        T sum = 0;
        const T* row = dyn + std::size_t(c) * S;
        for (int s = 0; s < S; ++s) sum += row[s];
        gb[c] += sum;
      }
      if (dx) {
        gemm_tn_acc(K, S, out_ch, w.data(), dyn,
                    (std::fill(dcols.begin(), dcols.end(), T(0)),
                     dcols.data()));
        col2im_acc(dcols.data(), in_ch, in_h, in_w, k, stride, pad, out_h,
                   out_w, dx->data() + std::size_t(n) * in_ch * in_h * in_w);
      }
    }
  }
};

template <typename T>
struct BNLayer {
  int ch = 0;
  T momentum = T(0.1), eps = T(1e-5);
  std::vector<T> gamma, beta, ggamma, gbeta, run_mean, run_var;
  std::vector<T> xhat, invstd;  // caches (train mode)

  void forward(std::vector<T>& x, int N, int S, RunMode mode) {
    const std::size_t cs = S;
    if (mode == RunMode::Train) {
      const T m = T(N) * T(S);
      xhat.resize(x.size());
      invstd.resize(ch);
      for (int c = 0; c < ch; ++c) {
        constexpr int L = 16;
        T sum_l[L] = {}, sq_l[L] = {};
        for (int n = 0; n < N; ++n) {
          const T* row = x.data() + (std::size_t(n) * ch + c) * cs;
          int s = 0;
          for (; s + L <= S; s += L)
            for (int j = 0; j < L; ++j) {
              sum_l[j] += row[s + j];
              sq_l[j] += row[s + j] * row[s + j];
            }
          for (; s < S; ++s) {
            sum_l[0] += row[s];
            sq_l[0] += row[s] * row[s];
          }
        }
        T sum = 0, sq = 0;
        for (int j = 0; j < L; ++j) {
          sum += sum_l[j];
          sq += sq_l[j];
        }
        const T mean = sum / m;
        T var = sq / m - mean * mean;
        if (var < T(0)) var = T(0);
        const T istd = T(1) / std::sqrt(var + eps);
        invstd[c] = istd;
        run_mean[c] = (T(1) - momentum) * run_mean[c] + momentum * mean;
        run_var[c] = (T(1) - momentum) * run_var[c] + momentum * var;
        const T g = gamma[c], bt = beta[c];
        for (int n = 0; n < N; ++n) {
          T* row = x.data() + (std::size_t(n) * ch + c) * cs;
          T* xh = xhat.data() + (std::size_t(n) * ch + c) * cs;
          for (int s = 0; s < S; ++s) {
            const T h = (row[s] - mean) * istd;
            xh[s] = h;
            row[s] = g * h + bt;
          }
        }
      }
    } else {
      for (int c = 0; c < ch; ++c) {
        const T istd = T(1) / std::sqrt(run_var[c] + eps);
        const T g = gamma[c] * istd;
        const T bt = beta[c] - run_mean[c] * g;
        for (int n = 0; n < N; ++n) {
          T* row = x.data() + (std::size_t(n) * ch + c) * cs;
          for (int s = 0; s < S; ++s) row[s] = g * row[s] + bt;
        }
      }
    }
  }

  /// Train-mode batch-statistics backward; dy is overwritten with dx.
  void backward(std::vector<T>& dy, int N, int S) {
    const T m = T(N) * T(S);
    for (int c = 0; c < ch; ++c) {
      T dg = 0, db = 0;
      for (int n = 0; n < N; ++n) {
        const T* drow = dy.data() + (std::size_t(n) * ch + c) * std::size_t(S);
        const T* xh = xhat.data() + (std::size_t(n) * ch + c) * std::size_t(S);
        for (int s = 0; s < S; ++s) {
          dg += drow[s] * xh[s];
          db += drow[s];
        }
      }
      ggamma[c] += dg;
      gbeta[c] += db;
      const T scale = gamma[c] * invstd[c] / m;
      for (int n = 0; n < N; ++n) {
        T* drow = dy.data() + (std::size_t(n) * ch + c) * std::size_t(S);
        const T* xh = xhat.data() + (std::size_t(n) * ch + c) * std::size_t(S);
        for (int s = 0; s < S; ++s)
          drow[s] = scale * (m * drow[s] - db - xh[s] * dg);
      }
    }
  }
};

template <typename T>
struct FCLayer {
  int in = 0, out = 0;
  bool relu_after = false;
  std::vector<T> w, b, gw, gb;  // w: [out][in]
  std::vector<T> x_cache, y_cache;

  void forward(const std::vector<T>& x, int N, std::vector<T>& y) {
    x_cache = x;
    y.resize(std::size_t(N) * out);
    gemm_nt(N, out, in, x.data(), w.data(), y.data(), false);
    for (int n = 0; n < N; ++n) {
      T* row = y.data() + std::size_t(n) * out;
      for (int o = 0; o < out; ++o) row[o] += b[o];
    }
    if (relu_after)
      for (T& v : y) v = v > T(0) ? v : T(0);
    y_cache = y;
  }

  void backward(std::vector<T>& dy, int N, std::vector<T>& dx) {
    if (relu_after)
      for (std::size_t i = 0; i < dy.size(); ++i)
        if (y_cache[i] <= T(0)) dy[i] = T(0);
    // gw[out,in] += dy^T x
    gemm_tn_acc(out, in, N, dy.data(), x_cache.data(), gw.data());
    for (int n = 0; n < N; ++n) {
      const T* row = dy.data() + std::size_t(n) * out;
      for (int o = 0; o < out; ++o) gb[o] += row[o];
    }
    dx.resize(std::size_t(N) * in);
    gemm_nn(N, in, out, dy.data(), w.data(), dx.data(), false);
  }
};

template <typename T>
struct Block {
  ConvLayer<T> conv;
  bool has_bn = false;
  BNLayer<T> bn;
  bool has_relu = false;
};

template <typename T>
struct NetImpl {
  ArchSpec arch;
  FusionVariant variant = FusionVariant::Stateless;
  int state_dim = 0;
  int features = 0;  // flat width at the fusion point
  int extra = 0;     // appended state-path width

  std::vector<Block<T>> blocks;
  std::vector<FCLayer<T>> head;
  std::vector<FCLayer<T>> mlp;  // MlpBranch only

  bool fake_quant = false;
  std::vector<ActRange> act_ranges;  // input + one per block output

  // forward caches
  int last_batch = 0;
  RunMode last_mode = RunMode::Train;
  std::vector<std::vector<T>> acts;  // acts[0] = input, acts[i+1] = block i out
  std::vector<T> concat_buf;
  std::vector<T> mlp_out;

  void init_params(std::uint64_t seed);
  std::vector<T> forward(const std::vector<T>& images,
                         const std::vector<T>& states, int N, RunMode mode);
  void backward(const std::vector<T>& dout, int N);
  void apply_act_quant(std::vector<T>& x, ActRange& r, RunMode mode);
};

template <typename T>
void init_uniform(std::vector<T>& v, double bound, SplitMix64& rng) {
  for (T& x : v) x = T(rng.uniform(-bound, bound));
}

template <typename T>
void NetImpl<T>::init_params(std::uint64_t seed) {
  std::uint64_t idx = 0;
  for (auto& blk : blocks) {
    SplitMix64 rng = SplitMix64::stream(seed, idx++);
    init_uniform(blk.conv.w, std::sqrt(6.0 / blk.conv.patch()), rng);
    std::fill(blk.conv.b.begin(), blk.conv.b.end(), T(0));
    if (blk.has_bn) {
      std::fill(blk.bn.gamma.begin(), blk.bn.gamma.end(), T(1));
      std::fill(blk.bn.beta.begin(), blk.bn.beta.end(), T(0));
      std::fill(blk.bn.run_mean.begin(), blk.bn.run_mean.end(), T(0));
      std::fill(blk.bn.run_var.begin(), blk.bn.run_var.end(), T(1));
    }
  }
  idx = 1000;  // head and branch streams, disjoint from the backbone's
  for (auto& fc : head) {
    SplitMix64 rng = SplitMix64::stream(seed, idx++);
    init_uniform(fc.w, std::sqrt(6.0 / fc.in), rng);
    std::fill(fc.b.begin(), fc.b.end(), T(0));
  }
  idx = 2000;
  for (auto& fc : mlp) {
    SplitMix64 rng = SplitMix64::stream(seed, idx++);
    init_uniform(fc.w, std::sqrt(6.0 / fc.in), rng);
    std::fill(fc.b.begin(), fc.b.end(), T(0));
  }
}

template <typename T>
void NetImpl<T>::apply_act_quant(std::vector<T>& x, ActRange& r, RunMode mode) {
  if (mode == RunMode::Train) {
    float lo = 0.0f, hi = 0.0f;
    for (const T& v : x) {
      lo = std::min(lo, float(v));
      hi = std::max(hi, float(v));
    }
    r.expand(lo, hi);
  }
  const T s = T(r.scale());
  const T zp = T(r.zero_point());
  for (T& v : x) {
    T q = std::round(v / s + zp);
    q = std::clamp(q, T(0), T(255));
    v = s * (q - zp);
  }
}

template <typename T>
std::vector<T> NetImpl<T>::forward(const std::vector<T>& images,
                                   const std::vector<T>& states, int N,
                                   RunMode mode) {
  const std::size_t plane = std::size_t(arch.in_h) * arch.in_w;
  if (images.size() != plane * std::size_t(N))
    throw std::invalid_argument("forward: image batch shape mismatch");
  if (variant != FusionVariant::Stateless &&
      states.size() != std::size_t(N) * state_dim)
    throw std::invalid_argument("forward: state batch shape mismatch");
  last_batch = N;
  last_mode = mode;
  acts.resize(blocks.size() + 1);

  const int in_ch = blocks.front().conv.in_ch;
  auto& x0 = acts[0];
  x0.resize(std::size_t(N) * in_ch * plane);
  for (int n = 0; n < N; ++n) {
    std::memcpy(x0.data() + std::size_t(n) * in_ch * plane,
                images.data() + std::size_t(n) * plane, plane * sizeof(T));
    // double-input: one constant plane per state channel
    for (int c = 1; c < in_ch; ++c) {
      const T v = states[std::size_t(n) * state_dim + (c - 1)];
      std::fill_n(x0.data() + (std::size_t(n) * in_ch + c) * plane, plane, v);
    }
  }
  if (fake_quant) apply_act_quant(x0, act_ranges[0], mode);

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& blk = blocks[i];
    blk.conv.forward(acts[i], N, acts[i + 1]);
    if (blk.has_bn) blk.bn.forward(acts[i + 1], N, blk.conv.spatial(), mode);
    if (blk.has_relu)
      for (T& v : acts[i + 1]) v = v > T(0) ? v : T(0);
    if (fake_quant) apply_act_quant(acts[i + 1], act_ranges[i + 1], mode);
  }

  // fusion point
  const std::vector<T>& feat = acts.back();
  const T* extra_src = nullptr;
  if (variant == FusionVariant::SingleNeuron ||
      variant == FusionVariant::FullyConnected) {
    extra_src = states.data();
  } else if (variant == FusionVariant::MlpBranch) {
    std::vector<T> h;
    mlp[0].forward(states, N, h);
    mlp[1].forward(h, N, mlp_out);
    extra_src = mlp_out.data();
  }

  std::vector<T>* cur = &concat_buf;
  concat_buf.resize(std::size_t(N) * (features + extra));
  for (int n = 0; n < N; ++n) {
    std::memcpy(concat_buf.data() + std::size_t(n) * (features + extra),
                feat.data() + std::size_t(n) * features, features * sizeof(T));
    if (extra > 0)
      std::memcpy(concat_buf.data() + std::size_t(n) * (features + extra) +
                      features,
                  extra_src + std::size_t(n) * extra, extra * sizeof(T));
  }

  std::vector<T> tmp;
  std::vector<T>* out = &tmp;
  for (std::size_t i = 0; i < head.size(); ++i) {
    head[i].forward(*cur, N, *out);
    std::swap(cur, out);
  }
  return *cur;
}

template <typename T>
void NetImpl<T>::backward(const std::vector<T>& dout, int N) {
  if (N != last_batch)
    throw std::invalid_argument("backward: batch does not match forward");
  std::vector<T> da = dout, db;
  for (std::size_t i = head.size(); i-- > 0;) {
    head[i].backward(da, N, db);
    std::swap(da, db);
  }
  // split concat gradient
  std::vector<T> dfeat(std::size_t(N) * features);
  std::vector<T> dextra(std::size_t(N) * extra);
  for (int n = 0; n < N; ++n) {
    std::memcpy(dfeat.data() + std::size_t(n) * features,
                da.data() + std::size_t(n) * (features + extra),
                features * sizeof(T));
    if (extra > 0)
      std::memcpy(dextra.data() + std::size_t(n) * extra,
                  da.data() + std::size_t(n) * (features + extra) + features,
                  extra * sizeof(T));
  }
  if (variant == FusionVariant::MlpBranch) {
    std::vector<T> dh;
    mlp[1].backward(dextra, N, dh);
    std::vector<T> dstate;
    mlp[0].backward(dh, N, dstate);  // state is an input; gradient dropped
  }

  std::vector<T> dy = std::move(dfeat), dx;
  for (std::size_t i = blocks.size(); i-- > 0;) {
    auto& blk = blocks[i];
    if (blk.has_relu) {
      const std::vector<T>& y = acts[i + 1];
      for (std::size_t j = 0; j < dy.size(); ++j)
        if (y[j] <= T(0)) dy[j] = T(0);
    }
    if (blk.has_bn) blk.bn.backward(dy, N, blk.conv.spatial());
    blk.conv.backward(dy, N, i > 0 ? &dx : nullptr);
    if (i > 0) std::swap(dy, dx);
  }
}

}  // namespace detail

}  // namespace vsf
