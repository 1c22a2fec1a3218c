#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace vsf {

enum class LayerKind { Conv, BatchNorm, ReLU, Flatten, FC };

struct LayerSpec {
  LayerKind kind;
  int out_ch = 0, k = 0, stride = 0, pad = 0;  // Conv
  int units = 0;                               // FC
};

/// Declarative layer list; drives both the runtime network and the cost
/// counter. feature_override pins the flatten width for symbolic
/// architectures whose inner layers are not materialized.
struct ArchSpec {
  std::string name;
  int in_ch = 1, in_h = 0, in_w = 0;
  std::vector<LayerSpec> layers;
  int feature_override = 0;  // 0 = computed as c*h*w at flatten
  int outputs = 4;
  bool symbolic = false;  // cost accounting only; not runnable
};

/// 64x64 grayscale backbone: three strided conv+BN+ReLU blocks, flatten to
/// 2048 features, FC head to 4 outputs.
ArchSpec desknet_arch();

/// Symbolic stand-in for the 160x96 backbone (first conv 5x5/32 stride 2,
/// 1920-unit fusion point); used only for cost accounting.
ArchSpec frontnet_symbolic_arch();

ArchSpec arch_by_id(std::uint16_t id);
std::uint16_t arch_id(const ArchSpec& arch);
ArchSpec arch_by_name(const std::string& name);

enum class FusionVariant : std::uint16_t {
  Stateless = 0,
  SingleNeuron = 1,
  FullyConnected = 2,
  DoubleInput = 3,
  MlpBranch = 4,
};

const char* variant_name(FusionVariant v);
FusionVariant variant_by_name(const std::string& name);

/// Memory at 1 byte per parameter (8-bit deployment convention) and
/// multiply-accumulates per inference. Biases and BN affine parameters
/// count as parameters but contribute 0 MACs.
struct CostReport {
  long long param_bytes = 0;
  long long macs = 0;
};

CostReport count_costs(const ArchSpec& arch, FusionVariant variant,
                       int state_dim);

/// Variant totals minus stateless totals of the same arch.
CostReport cost_delta(const ArchSpec& arch, FusionVariant variant,
                      int state_dim);

enum class RunMode { Train, Eval };

/// Uint8 activation quantization range (asymmetric, min/max calibrated).
struct ActRange {
  float min = 0.0f, max = 0.0f;
  float scale() const {
    float s = (max - min) / 255.0f;
    return s > 0.0f ? s : 1.0f;  // degenerate calibration fallback
  }
  int zero_point() const;
  void expand(float lo, float hi) {
    if (lo < min) min = lo;
    if (hi > max) max = hi;
  }
};

namespace detail {
template <typename T>
struct NetImpl;
}

template <typename T>
struct ParamRef {
  std::string name;
  T* value = nullptr;
  T* grad = nullptr;
  std::int64_t size = 0;
};

/// The regression network: backbone conv stack, fusion wiring, FC head.
/// Scalar type T is float for training/inference and double for gradient
/// checking. Forward caches activations for a subsequent backward.
template <typename T>
class Model {
 public:
  Model(const ArchSpec& arch, FusionVariant variant, int state_dim,
        std::uint64_t init_seed);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ArchSpec& arch() const;
  FusionVariant variant() const;
  int state_dim() const;

  /// images: N x in_h x in_w grayscale planes already normalized to
  /// (px-128)/128; states: N x state_dim. Returns N x outputs.
  std::vector<T> forward(const std::vector<T>& images,
                         const std::vector<T>& states, int batch, RunMode mode);

  /// Reverse pass for the most recent forward; accumulates into grads.
  void backward(const std::vector<T>& output_grad, int batch);

  void zero_grads();

  /// Learnable tensors in declaration order (excludes BN running stats).
  std::vector<ParamRef<T>> params();

  /// All tensors for serialization (includes BN running stats).
  std::vector<ParamRef<T>> state_tensors();

  std::int64_t param_count() const;

  /// Quantization-aware fine-tuning support: snap weights and activations
  /// to the int8/uint8 grids during forward, straight-through backward.
  void set_fake_quant(bool enabled);
  bool fake_quant() const;
  std::vector<ActRange>& act_ranges();  // input + each conv block output

  /// Internal layer access for the quantization path and serialization.
  detail::NetImpl<T>& net() { return *impl_; }
  const detail::NetImpl<T>& net() const { return *impl_; }

  static_assert(sizeof(T) == 4 || sizeof(T) == 8);

 private:
  std::unique_ptr<detail::NetImpl<T>> impl_;
  template <typename>
  friend class Model;
  friend struct detail::NetImpl<T>;

 public:
  /// BN layers folded into the preceding convolutions using running
  /// statistics; the returned model's arch has no BatchNorm layers.
  Model<T> fold_batchnorm() const;
};

extern template class Model<float>;
extern template class Model<double>;

/// Normalizes raw 8-bit pixels to (px-128)/128.
template <typename T>
inline T normalize_pixel(std::uint8_t px) {
  return (T(px) - T(128)) / T(128);
}

}  // namespace vsf
