#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vsf/dataset.hpp"
#include "vsf/nnet.hpp"
#include "vsf/quant.hpp"

namespace vsf {

struct QatConfig {
  int epochs = 10;
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 100;
  int batch_size = 64;
  int patience = 15;  // early stopping
  std::uint64_t seed = 0;
  bool halt_on_patience = true;  // false: keep training, still pick best
  QatConfig qat;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;  // 0-based index of the minimum validation loss
};

/// Dataset flattened to contiguous training buffers; images normalized to
/// (px-128)/128.
struct BatchData {
  int n = 0, height = 0, width = 0, state_dim = 0, label_dim = 0;
  std::vector<float> images;
  std::vector<float> states;
  std::vector<float> labels;
  std::vector<std::uint16_t> group_ids;

  static BatchData from_dataset(const Dataset& ds);
};

/// Mean L1 over all scalars: L = (1/N) sum |y - yhat|, N = total scalar
/// count. Returns the loss and dL/dpred (sign(pred - target)/N; sign(0)=0).
template <typename T>
std::pair<double, std::vector<T>> l1_loss(const std::vector<T>& pred,
                                          const std::vector<T>& target);

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias correction,
/// decoupled weight decay). t is the 1-based step index.
template <typename T>
void adam_step(T* param, const T* grad, T* m, T* v, std::int64_t n, int t,
               double lr, double weight_decay);

/// Per-tensor Adam moment buffers for a model.
template <typename T>
struct AdamOpt {
  explicit AdamOpt(Model<T>& model);
  void step(Model<T>& model, double lr, double weight_decay);
  int t = 0;

 private:
  std::vector<std::vector<T>> m_, v_;
};

/// Epoch loop with seeded shuffling, early stopping, and best-epoch
/// snapshot restoration. Throws NumericError (with epoch/batch) on a
/// non-finite loss.
TrainHistory train(Model<float>& model, const BatchData& train_data,
                   const BatchData& val_data, const TrainConfig& config);

/// Quantization-aware fine-tuning: BN folded, weights and activations
/// fake-quantized with straight-through gradients, Adam with weight decay.
/// With qat.epochs == 0 this reduces to post-training quantization.
std::pair<QuantModel, TrainHistory> qat_finetune(const Model<float>& model,
                                                 const BatchData& train_data,
                                                 const BatchData& val_data,
                                                 const TrainConfig& config);

/// Mean L1 of a QuantModel over a dataset (validation-style pass).
double quant_val_loss(const QuantModel& qm, const BatchData& data,
                      int batch_size = 256);

}  // namespace vsf
