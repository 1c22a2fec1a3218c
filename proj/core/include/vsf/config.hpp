#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vsf/augment.hpp"
#include "vsf/scenegen.hpp"
#include "vsf/train.hpp"

namespace vsf {

/// Flat key-value configuration with namespaced keys (scene.*, augment.*,
/// train.*, eval.*). Every key has a default; unknown keys are rejected
/// with FormatError. Files hold `key = value` lines with `#` comments.
class ExperimentConfig {
 public:
  ExperimentConfig();  // all defaults

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Fully resolved config in stable key order, for the provenance echo.
  std::string render() const;
  void echo(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& items() const {
    return items_;
  }

  SceneConfig scene_config() const;
  AugmentConfig augment_config() const;
  TrainConfig train_config() const;
  CameraIntrinsics intrinsics() const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
  std::size_t find(const std::string& key) const;  // npos when absent
};

}  // namespace vsf
