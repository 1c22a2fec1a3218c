#include "vsf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "vsf/errors.hpp"
#include "vsf/rng.hpp"

namespace vsf {

BatchData BatchData::from_dataset(const Dataset& ds) {
  BatchData b;
  b.n = int(ds.samples.size());
  b.height = ds.header.height;
  b.width = ds.header.width;
  b.state_dim = ds.header.state_dim;
  b.label_dim = ds.header.label_dim;
  const std::size_t plane = std::size_t(b.height) * b.width;
  b.images.resize(std::size_t(b.n) * plane);
  b.states.resize(std::size_t(b.n) * b.state_dim);
  b.labels.resize(std::size_t(b.n) * b.label_dim);
  b.group_ids.resize(b.n);
  for (int i = 0; i < b.n; ++i) {
    const Sample& s = ds.samples[i];
    for (std::size_t j = 0; j < plane; ++j)
      b.images[std::size_t(i) * plane + j] = normalize_pixel<float>(s.image[j]);
    std::copy(s.state.begin(), s.state.end(),
              b.states.begin() + std::size_t(i) * b.state_dim);
    std::copy(s.label.begin(), s.label.end(),
              b.labels.begin() + std::size_t(i) * b.label_dim);
    b.group_ids[i] = s.group_id;
  }
  return b;
}

template <typename T>
std::pair<double, std::vector<T>> l1_loss(const std::vector<T>& pred,
                                          const std::vector<T>& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("l1_loss: shape mismatch");
  const double inv_n = 1.0 / double(pred.size());
  double loss = 0.0;
  std::vector<T> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    loss += std::abs(d);
    grad[i] = T(d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0));
  }
  return {loss * inv_n, std::move(grad)};
}

template std::pair<double, std::vector<float>> l1_loss(
    const std::vector<float>&, const std::vector<float>&);
template std::pair<double, std::vector<double>> l1_loss(
    const std::vector<double>&, const std::vector<double>&);

template <typename T>
void adam_step(T* param, const T* grad, T* m, T* v, std::int64_t n, int t,
               double lr, double weight_decay) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::int64_t i = 0; i < n; ++i) {
    const double g = double(grad[i]);
    const double mi = beta1 * double(m[i]) + (1.0 - beta1) * g;
    const double vi = beta2 * double(v[i]) + (1.0 - beta2) * g * g;
    m[i] = T(mi);
    v[i] = T(vi);
    double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
    if (weight_decay > 0.0) update += lr * weight_decay * double(param[i]);
    param[i] = T(double(param[i]) - update);
  }
}

template void adam_step(float*, const float*, float*, float*, std::int64_t,
                        int, double, double);
template void adam_step(double*, const double*, double*, double*, std::int64_t,
                        int, double, double);

template <typename T>
AdamOpt<T>::AdamOpt(Model<T>& model) {
  for (const auto& p : model.params()) {
    m_.emplace_back(p.size, T(0));
    v_.emplace_back(p.size, T(0));
  }
}

template <typename T>
void AdamOpt<T>::step(Model<T>& model, double lr, double weight_decay) {
  ++t;
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_step(params[i].value, params[i].grad, m_[i].data(), v_[i].data(),
              params[i].size, t, lr, weight_decay);
}

template struct AdamOpt<float>;
template struct AdamOpt<double>;

namespace {

/// Gathers a batch of rows into contiguous buffers.
void gather(const BatchData& d, const std::vector<int>& idx, int begin,
            int count, std::vector<float>& images, std::vector<float>& states,
            std::vector<float>& labels) {
  const std::size_t plane = std::size_t(d.height) * d.width;
  images.resize(count * plane);
  states.resize(std::size_t(count) * d.state_dim);
  labels.resize(std::size_t(count) * d.label_dim);
  for (int i = 0; i < count; ++i) {
    const int s = idx[begin + i];
    std::memcpy(images.data() + std::size_t(i) * plane,
                d.images.data() + std::size_t(s) * plane,
                plane * sizeof(float));
    std::memcpy(states.data() + std::size_t(i) * d.state_dim,
                d.states.data() + std::size_t(s) * d.state_dim,
                d.state_dim * sizeof(float));
    std::memcpy(labels.data() + std::size_t(i) * d.label_dim,
                d.labels.data() + std::size_t(s) * d.label_dim,
                d.label_dim * sizeof(float));
  }
}

double eval_loss(Model<float>& model, const BatchData& d, int batch_size) {
  const std::size_t plane = std::size_t(d.height) * d.width;
  double total = 0.0;
  std::int64_t count = 0;
  std::vector<float> images, states, labels;
  std::vector<int> idx(d.n);
  for (int i = 0; i < d.n; ++i) idx[i] = i;
  for (int at = 0; at < d.n; at += batch_size) {
    const int bn = std::min(batch_size, d.n - at);
    gather(d, idx, at, bn, images, states, labels);
    auto pred = model.forward(images, states, bn, RunMode::Eval);
    for (std::size_t i = 0; i < pred.size(); ++i)
      total += std::abs(double(pred[i]) - double(labels[i]));
    count += std::int64_t(pred.size());
  }
  (void)plane;
  return total / double(count);
}

/// Snaps conv weight tensors to the symmetric int8 grid in place,
/// returning the originals for straight-through restoration.
std::vector<std::vector<float>> snap_conv_weights(Model<float>& model) {
  std::vector<std::vector<float>> saved;
  for (auto& p : model.params()) {
    if (p.name.rfind("conv", 0) != 0 || p.name.size() < 2 ||
        p.name.substr(p.name.size() - 2) != ".w")
      continue;
    saved.emplace_back(p.value, p.value + p.size);
    float amax = 0.0f;
    for (std::int64_t i = 0; i < p.size; ++i)
      amax = std::max(amax, std::abs(p.value[i]));
    const float s = amax > 0.0f ? amax / 127.0f : 1.0f;
    for (std::int64_t i = 0; i < p.size; ++i)
      p.value[i] =
          s * std::clamp(float(std::lround(p.value[i] / s)), -127.0f, 127.0f);
  }
  return saved;
}

void restore_conv_weights(Model<float>& model,
                          const std::vector<std::vector<float>>& saved) {
  std::size_t j = 0;
  for (auto& p : model.params()) {
    if (p.name.rfind("conv", 0) != 0 || p.name.size() < 2 ||
        p.name.substr(p.name.size() - 2) != ".w")
      continue;
    std::copy(saved[j].begin(), saved[j].end(), p.value);
    ++j;
  }
}

void run_epochs(Model<float>& model, const BatchData& train_data,
                const BatchData& val_data, int epochs, int batch_size,
                double lr, double weight_decay, std::uint64_t seed,
                int patience, bool halt_on_patience, bool fake_quant_weights,
                TrainHistory& hist, Model<float>& best) {
  AdamOpt<float> opt(model);
  std::vector<int> idx(train_data.n);
  for (int i = 0; i < train_data.n; ++i) idx[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<float> images, states, labels;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // seeded Fisher-Yates, independent of library shuffle implementations
    SplitMix64 rng = SplitMix64::stream(seed, 0xE50C000ULL + epoch);
    for (int i = train_data.n - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.uniform_u64(std::uint64_t(i) + 1)]);

    double epoch_loss = 0.0;
    std::int64_t scalar_count = 0;
    int batch_index = 0;
    for (int at = 0; at < train_data.n; at += batch_size, ++batch_index) {
      const int bn = std::min(batch_size, train_data.n - at);
      gather(train_data, idx, at, bn, images, states, labels);
      std::vector<std::vector<float>> saved;
      if (fake_quant_weights) saved = snap_conv_weights(model);
      auto pred = model.forward(images, states, bn, RunMode::Train);
      auto [loss, grad] = l1_loss(pred, labels);
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index));
      model.zero_grads();
      model.backward(grad, bn);
      if (fake_quant_weights) restore_conv_weights(model, saved);
      opt.step(model, lr, weight_decay);
      epoch_loss += loss * double(pred.size());
      scalar_count += std::int64_t(pred.size());
    }
    hist.train_loss.push_back(epoch_loss / double(scalar_count));

    std::vector<std::vector<float>> saved;
    if (fake_quant_weights) saved = snap_conv_weights(model);
    const double vl = eval_loss(model, val_data, 256);
    if (fake_quant_weights) restore_conv_weights(model, saved);
    hist.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      hist.best_epoch = epoch;
      best = model;
    }
    if (halt_on_patience && epoch - hist.best_epoch >= patience) break;
  }
}

}  // namespace

TrainHistory train(Model<float>& model, const BatchData& train_data,
                   const BatchData& val_data, const TrainConfig& config) {
  if (train_data.n == 0 || val_data.n == 0)
    throw std::invalid_argument("train: empty dataset");
  TrainHistory hist;
  Model<float> best = model;
  run_epochs(model, train_data, val_data, config.epochs, config.batch_size,
             config.learning_rate, 0.0, config.seed, config.patience,
             config.halt_on_patience, false, hist, best);
  model = best;
  return hist;
}

std::pair<QuantModel, TrainHistory> qat_finetune(const Model<float>& model,
                                                 const BatchData& train_data,
                                                 const BatchData& val_data,
                                                 const TrainConfig& config) {
  Model<float> folded = model.fold_batchnorm();
  TrainHistory hist;
  if (config.qat.epochs > 0) {
    folded.set_fake_quant(true);
    Model<float> initial = folded;
    // pre-finetune validation loss under the same weight snapping; the
    // initial snapshot competes with every epoch for best-model selection
    auto saved = snap_conv_weights(folded);
    const double initial_val = eval_loss(folded, val_data, 256);
    restore_conv_weights(folded, saved);
    Model<float> best = folded;
    // patience = epochs: run the full fine-tune, keep the best snapshot
    run_epochs(folded, train_data, val_data, config.qat.epochs,
               config.batch_size, config.qat.learning_rate,
               config.qat.weight_decay, config.seed, config.qat.epochs, false,
               true, hist, best);
    const bool improved = hist.best_epoch >= 0 &&
                          hist.val_loss[hist.best_epoch] < initial_val;
    folded = improved ? best : initial;
    folded.set_fake_quant(false);
  }
  // calibration over the first training batch block
  const int calib = std::min(train_data.n, 256);
  const std::size_t plane = std::size_t(train_data.height) * train_data.width;
  std::vector<float> ci(train_data.images.begin(),
                        train_data.images.begin() + calib * plane);
  std::vector<float> cs(
      train_data.states.begin(),
      train_data.states.begin() + std::size_t(calib) * train_data.state_dim);
  return {quantize(folded, ci, cs, calib), std::move(hist)};
}

double quant_val_loss(const QuantModel& qm, const BatchData& data,
                      int batch_size) {
  const std::size_t plane = std::size_t(data.height) * data.width;
  double total = 0.0;
  std::int64_t count = 0;
  for (int at = 0; at < data.n; at += batch_size) {
    const int bn = std::min(batch_size, data.n - at);
    std::vector<float> images(data.images.begin() + at * plane,
                              data.images.begin() + (at + bn) * plane);
    std::vector<float> states(
        data.states.begin() + std::size_t(at) * data.state_dim,
        data.states.begin() + std::size_t(at + bn) * data.state_dim);
    auto pred = q_forward(qm, images, states, bn);
    for (std::size_t i = 0; i < pred.size(); ++i)
      total += std::abs(double(pred[i]) -
                        double(data.labels[std::size_t(at) * data.label_dim + i]));
    count += std::int64_t(pred.size());
  }
  return total / double(count);
}

}  // namespace vsf
