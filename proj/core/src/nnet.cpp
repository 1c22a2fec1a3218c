#include "vsf/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "net_detail.hpp"

namespace vsf {

// ---------------------------------------------------------------------------
// Architectures

ArchSpec desknet_arch() {
  ArchSpec a;
  a.name = "desknet";
  a.in_ch = 1;
  a.in_h = 64;
  a.in_w = 64;
  a.outputs = 4;
  a.layers = {
      {LayerKind::Conv, 8, 5, 2, 2},  {LayerKind::BatchNorm},
      {LayerKind::ReLU},              {LayerKind::Conv, 16, 3, 2, 1},
      {LayerKind::BatchNorm},         {LayerKind::ReLU},
      {LayerKind::Conv, 32, 3, 2, 1}, {LayerKind::BatchNorm},
      {LayerKind::ReLU},              {LayerKind::Flatten},
      {LayerKind::FC, 0, 0, 0, 0, 4},
  };
  return a;
}

ArchSpec frontnet_symbolic_arch() {
  ArchSpec a;
  a.name = "frontnet_sym";
  a.in_ch = 1;
  a.in_h = 96;
  a.in_w = 160;
  a.outputs = 4;
  a.symbolic = true;
  a.feature_override = 1920;
  a.layers = {
      {LayerKind::Conv, 32, 5, 2, 2},
      {LayerKind::Flatten},
      {LayerKind::FC, 0, 0, 0, 0, 4},
  };
  return a;
}

ArchSpec arch_by_id(std::uint16_t id) {
  switch (id) {
    case 0: return desknet_arch();
    case 1: return frontnet_symbolic_arch();
    default: throw std::invalid_argument("unknown arch id");
  }
}

std::uint16_t arch_id(const ArchSpec& arch) {
  if (arch.name == "desknet") return 0;
  if (arch.name == "frontnet_sym") return 1;
  throw std::invalid_argument("unknown arch " + arch.name);
}

ArchSpec arch_by_name(const std::string& name) {
  if (name == "desknet") return desknet_arch();
  if (name == "frontnet_sym") return frontnet_symbolic_arch();
  throw std::invalid_argument("unknown arch " + name);
}

const char* variant_name(FusionVariant v) {
  switch (v) {
    case FusionVariant::Stateless: return "stateless";
    case FusionVariant::SingleNeuron: return "single_neuron";
    case FusionVariant::FullyConnected: return "fully_connected";
    case FusionVariant::DoubleInput: return "double_input";
    case FusionVariant::MlpBranch: return "mlp_branch";
  }
  return "?";
}

FusionVariant variant_by_name(const std::string& name) {
  for (auto v : {FusionVariant::Stateless, FusionVariant::SingleNeuron,
                 FusionVariant::FullyConnected, FusionVariant::DoubleInput,
                 FusionVariant::MlpBranch})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown fusion variant " + name);
}

// ---------------------------------------------------------------------------
// Cost accounting

CostReport count_costs(const ArchSpec& arch, FusionVariant variant,
                       int state_dim) {
  CostReport r;
  int c = arch.in_ch, h = arch.in_h, w = arch.in_w;
  if (variant == FusionVariant::DoubleInput) c += state_dim;
  long long features = -1;  // flat width once flattened
  bool fused = false;       // first FC after flatten handled
  for (const LayerSpec& l : arch.layers) {
    switch (l.kind) {
      case LayerKind::Conv: {
        const int oh = (h + 2 * l.pad - l.k) / l.stride + 1;
        const int ow = (w + 2 * l.pad - l.k) / l.stride + 1;
        r.param_bytes += 1LL * l.out_ch * (c * l.k * l.k + 1);
        r.macs += 1LL * oh * ow * l.out_ch * c * l.k * l.k;
        c = l.out_ch;
        h = oh;
        w = ow;
        break;
      }
      case LayerKind::BatchNorm:
        r.param_bytes += 2LL * c;
        break;
      case LayerKind::ReLU:
        break;
      case LayerKind::Flatten:
        features = arch.feature_override > 0 ? arch.feature_override
                                             : 1LL * c * h * w;
        break;
      case LayerKind::FC: {
        if (features < 0)
          throw std::invalid_argument("FC before flatten in arch " + arch.name);
        long long in = features;
        if (!fused) {
          fused = true;
          switch (variant) {
            case FusionVariant::SingleNeuron: in += state_dim; break;
            case FusionVariant::MlpBranch:
              in += 8;
              r.param_bytes += 8LL * (state_dim + 1) + 8LL * (8 + 1);
              r.macs += 8LL * state_dim + 64;
              break;
            case FusionVariant::FullyConnected: {
              // concat(features, state) -> FC(32) -> ReLU -> FC(units),
              // replacing this FC
              in += state_dim;
              r.param_bytes += 32LL * (in + 1) + 1LL * l.units * (32 + 1);
              r.macs += 32LL * in + 32LL * l.units;
              features = l.units;
              continue;
            }
            default: break;
          }
        }
        r.param_bytes += 1LL * l.units * (in + 1);
        r.macs += 1LL * l.units * in;
        features = l.units;
        break;
      }
    }
  }
  return r;
}

CostReport cost_delta(const ArchSpec& arch, FusionVariant variant,
                      int state_dim) {
  const CostReport base = count_costs(arch, FusionVariant::Stateless, state_dim);
  const CostReport v = count_costs(arch, variant, state_dim);
  return {v.param_bytes - base.param_bytes, v.macs - base.macs};
}

int ActRange::zero_point() const {
  const float s = scale();
  return std::clamp(int(std::lround(-min / s)), 0, 255);
}

// ---------------------------------------------------------------------------
// Model

namespace {

template <typename T>
std::unique_ptr<detail::NetImpl<T>> build_net(const ArchSpec& arch,
                                              FusionVariant variant,
                                              int state_dim) {
  if (arch.symbolic)
    throw std::invalid_argument("arch " + arch.name +
                                " is symbolic (cost accounting only)");
  if (variant != FusionVariant::Stateless && state_dim < 1)
    throw std::invalid_argument("stateful variant needs state_dim >= 1");
  auto net = std::make_unique<detail::NetImpl<T>>();
  net->arch = arch;
  net->variant = variant;
  net->state_dim = state_dim;

  int c = arch.in_ch, h = arch.in_h, w = arch.in_w;
  if (variant == FusionVariant::DoubleInput) c += state_dim;
  bool flattened = false;
  bool fused = false;
  for (std::size_t li = 0; li < arch.layers.size(); ++li) {
    const LayerSpec& l = arch.layers[li];
    switch (l.kind) {
      case LayerKind::Conv: {
        detail::Block<T> blk;
        auto& cv = blk.conv;
        cv.in_ch = c;
        cv.out_ch = l.out_ch;
        cv.k = l.k;
        cv.stride = l.stride;
        cv.pad = l.pad;
        cv.in_h = h;
        cv.in_w = w;
        cv.out_h = (h + 2 * l.pad - l.k) / l.stride + 1;
        cv.out_w = (w + 2 * l.pad - l.k) / l.stride + 1;
        cv.w.resize(std::size_t(cv.out_ch) * cv.patch());
        cv.b.resize(cv.out_ch);
        cv.gw.assign(cv.w.size(), T(0));
        cv.gb.assign(cv.b.size(), T(0));
        net->blocks.push_back(std::move(blk));
        c = l.out_ch;
        h = cv.out_h;
        w = cv.out_w;
        break;
      }
      case LayerKind::BatchNorm: {
        auto& blk = net->blocks.back();
        blk.has_bn = true;
        blk.bn.ch = c;
        blk.bn.gamma.resize(c);
        blk.bn.beta.resize(c);
        blk.bn.ggamma.assign(c, T(0));
        blk.bn.gbeta.assign(c, T(0));
        blk.bn.run_mean.resize(c);
        blk.bn.run_var.resize(c);
        break;
      }
      case LayerKind::ReLU:
        if (flattened) {
          if (!net->head.empty()) net->head.back().relu_after = true;
        } else {
          net->blocks.back().has_relu = true;
        }
        break;
      case LayerKind::Flatten:
        flattened = true;
        net->features = c * h * w;
        break;
      case LayerKind::FC: {
        int in = net->head.empty() ? net->features : net->head.back().out;
        auto make_fc = [](int fin, int fout) {
          detail::FCLayer<T> fc;
          fc.in = fin;
          fc.out = fout;
          fc.w.resize(std::size_t(fout) * fin);
          fc.b.resize(fout);
          fc.gw.assign(fc.w.size(), T(0));
          fc.gb.assign(fc.b.size(), T(0));
          return fc;
        };
        if (!fused && net->head.empty()) {
          fused = true;
          switch (variant) {
            case FusionVariant::SingleNeuron:
              net->extra = state_dim;
              break;
            case FusionVariant::MlpBranch:
              net->extra = 8;
              net->mlp.push_back(make_fc(state_dim, 8));
              net->mlp.back().relu_after = true;
              net->mlp.push_back(make_fc(8, 8));
              net->mlp.back().relu_after = true;
              break;
            case FusionVariant::FullyConnected: {
              net->extra = state_dim;
              auto fc32 = make_fc(in + state_dim, 32);
              fc32.relu_after = true;
              net->head.push_back(std::move(fc32));
              net->head.push_back(make_fc(32, l.units));
              continue;
            }
            default:
              break;
          }
          in += net->extra;
        }
        net->head.push_back(make_fc(in, l.units));
        break;
      }
    }
  }
  net->act_ranges.assign(net->blocks.size() + 1, ActRange{});
  return net;
}

}  // namespace

template <typename T>
Model<T>::Model(const ArchSpec& arch, FusionVariant variant, int state_dim,
                std::uint64_t init_seed)
    : impl_(build_net<T>(arch, variant, state_dim)) {
  impl_->init_params(init_seed);
}

template <typename T>
Model<T>::Model(const Model& other)
    : impl_(std::make_unique<detail::NetImpl<T>>(*other.impl_)) {}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other)
    impl_ = std::make_unique<detail::NetImpl<T>>(*other.impl_);
  return *this;
}

template <typename T>
Model<T>::Model(Model&&) noexcept = default;
template <typename T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;
template <typename T>
Model<T>::~Model() = default;

template <typename T>
const ArchSpec& Model<T>::arch() const {
  return impl_->arch;
}
template <typename T>
FusionVariant Model<T>::variant() const {
  return impl_->variant;
}
template <typename T>
int Model<T>::state_dim() const {
  return impl_->state_dim;
}

template <typename T>
std::vector<T> Model<T>::forward(const std::vector<T>& images,
                                 const std::vector<T>& states, int batch,
                                 RunMode mode) {
  return impl_->forward(images, states, batch, mode);
}

template <typename T>
void Model<T>::backward(const std::vector<T>& output_grad, int batch) {
  impl_->backward(output_grad, batch);
}

template <typename T>
void Model<T>::zero_grads() {
  for (auto& p : params()) std::fill_n(p.grad, p.size, T(0));
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::params() {
  std::vector<ParamRef<T>> out;
  auto add = [&out](const std::string& name, std::vector<T>& v,
                    std::vector<T>& g) {
    out.push_back({name, v.data(), g.data(), std::int64_t(v.size())});
  };
  for (std::size_t i = 0; i < impl_->blocks.size(); ++i) {
    auto& blk = impl_->blocks[i];
    const std::string p = "conv" + std::to_string(i);
    add(p + ".w", blk.conv.w, blk.conv.gw);
    add(p + ".b", blk.conv.b, blk.conv.gb);
    if (blk.has_bn) {
      add(p + ".bn.gamma", blk.bn.gamma, blk.bn.ggamma);
      add(p + ".bn.beta", blk.bn.beta, blk.bn.gbeta);
    }
  }
  for (std::size_t i = 0; i < impl_->head.size(); ++i) {
    const std::string p = "head" + std::to_string(i);
    add(p + ".w", impl_->head[i].w, impl_->head[i].gw);
    add(p + ".b", impl_->head[i].b, impl_->head[i].gb);
  }
  for (std::size_t i = 0; i < impl_->mlp.size(); ++i) {
    const std::string p = "mlp" + std::to_string(i);
    add(p + ".w", impl_->mlp[i].w, impl_->mlp[i].gw);
    add(p + ".b", impl_->mlp[i].b, impl_->mlp[i].gb);
  }
  return out;
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::state_tensors() {
  auto out = params();
  for (std::size_t i = 0; i < impl_->blocks.size(); ++i) {
    auto& blk = impl_->blocks[i];
    if (!blk.has_bn) continue;
    const std::string p = "conv" + std::to_string(i);
    out.push_back({p + ".bn.run_mean", blk.bn.run_mean.data(), nullptr,
                   std::int64_t(blk.bn.run_mean.size())});
    out.push_back({p + ".bn.run_var", blk.bn.run_var.data(), nullptr,
                   std::int64_t(blk.bn.run_var.size())});
  }
  return out;
}

template <typename T>
std::int64_t Model<T>::param_count() const {
  std::int64_t n = 0;
  for (auto& p : const_cast<Model<T>*>(this)->params()) n += p.size;
  return n;
}

template <typename T>
void Model<T>::set_fake_quant(bool enabled) {
  impl_->fake_quant = enabled;
}
template <typename T>
bool Model<T>::fake_quant() const {
  return impl_->fake_quant;
}
template <typename T>
std::vector<ActRange>& Model<T>::act_ranges() {
  return impl_->act_ranges;
}

template <typename T>
Model<T> Model<T>::fold_batchnorm() const {
  ArchSpec folded = impl_->arch;
  folded.layers.erase(
      std::remove_if(folded.layers.begin(), folded.layers.end(),
                     [](const LayerSpec& l) {
                       return l.kind == LayerKind::BatchNorm;
                     }),
      folded.layers.end());
  folded.name = impl_->arch.name;
  Model<T> out(folded, impl_->variant, impl_->state_dim, 0);
  // copy backbone with BN absorbed into conv weights and biases
  for (std::size_t i = 0; i < impl_->blocks.size(); ++i) {
    const auto& src = impl_->blocks[i];
    auto& dst = out.impl_->blocks[i];
    dst.conv.w = src.conv.w;
    dst.conv.b = src.conv.b;
    if (src.has_bn) {
      const auto& bn = src.bn;
      const int patch = src.conv.patch();
      for (int c = 0; c < src.conv.out_ch; ++c) {
        const T istd = T(1) / std::sqrt(bn.run_var[c] + bn.eps);
        const T g = bn.gamma[c] * istd;
        for (int j = 0; j < patch; ++j)
          dst.conv.w[std::size_t(c) * patch + j] *= g;
        dst.conv.b[c] = bn.beta[c] + (src.conv.b[c] - bn.run_mean[c]) * g;
      }
    }
  }
  for (std::size_t i = 0; i < impl_->head.size(); ++i) {
    out.impl_->head[i].w = impl_->head[i].w;
    out.impl_->head[i].b = impl_->head[i].b;
  }
  for (std::size_t i = 0; i < impl_->mlp.size(); ++i) {
    out.impl_->mlp[i].w = impl_->mlp[i].w;
    out.impl_->mlp[i].b = impl_->mlp[i].b;
  }
  out.impl_->act_ranges = impl_->act_ranges;
  return out;
}

template class Model<float>;
template class Model<double>;

}  // namespace vsf
