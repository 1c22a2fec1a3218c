#pragma once

#include <cstdint>
#include <vector>

#include "vsf/nnet.hpp"

namespace vsf {

/// Symmetric per-tensor int8 weights for one convolution.
struct QuantConvWeights {
  std::vector<std::int8_t> q;
  float scale = 1.0f;
};

/// Int8 deployment model: BN folded into the convolutions, conv weights
/// symmetric int8, activations asymmetric uint8 with calibrated ranges.
/// The state branch and the FC head stay in float.
struct QuantModel {
  Model<float> folded;  // BN-free float model; head/branch weights live here
  std::vector<QuantConvWeights> conv_weights;  // one per conv block
  std::vector<ActRange> act_ranges;            // input + one per block output
};

/// Post-training quantization with min/max activation calibration over the
/// given batch (images normalized, like Model::forward). Throws
/// NumericError on an empty calibration batch.
QuantModel quantize(const Model<float>& model,
                    const std::vector<float>& calib_images,
                    const std::vector<float>& calib_states, int batch);

/// Integer convolutions with float requantization between layers; fusion
/// and head in float.
std::vector<float> q_forward(const QuantModel& qm,
                             const std::vector<float>& images,
                             const std::vector<float>& states, int batch);

}  // namespace vsf
