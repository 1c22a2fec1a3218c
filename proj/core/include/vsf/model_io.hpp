#pragma once

#include <optional>
#include <string>

#include "vsf/nnet.hpp"
#include "vsf/quant.hpp"

namespace vsf {

/// "VSFM" container holding either a float model or an int8 QuantModel
/// (float payload plus int8 weights, scales and activation ranges).
struct ModelFile {
  std::optional<Model<float>> model;
  std::optional<QuantModel> qmodel;

  bool is_quant() const { return qmodel.has_value(); }
};

void save_model(const std::string& path, const Model<float>& model);
void save_quant_model(const std::string& path, const QuantModel& qm);

/// Throws FormatError (BadMagic / BadVersion / Truncated) on malformed
/// input.
ModelFile load_model(const std::string& path);

}  // namespace vsf
