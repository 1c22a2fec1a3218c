#include "vsf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vsf/errors.hpp"

namespace vsf {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  const SceneConfig sc;
  const AugmentConfig ac;
  const TrainConfig tc;
  const CameraIntrinsics in;
  auto add = [&](const std::string& k, const std::string& v) {
    items_.emplace_back(k, v);
  };
  auto addf = [&](const std::string& k, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    add(k, ss.str());
  };
  addf("scene.x_lo", sc.x.lo);
  addf("scene.x_hi", sc.x.hi);
  addf("scene.y_lo", sc.y.lo);
  addf("scene.y_hi", sc.y.hi);
  addf("scene.z_lo", sc.z.lo);
  addf("scene.z_hi", sc.z.hi);
  addf("scene.phi_lo", sc.phi.lo);
  addf("scene.phi_hi", sc.phi.hi);
  addf("scene.pitch_lo", sc.pitch.lo);
  addf("scene.pitch_hi", sc.pitch.hi);
  addf("scene.roll_lo", sc.roll.lo);
  addf("scene.roll_hi", sc.roll.hi);
  addf("scene.observer_xy_lo", sc.observer_xy.lo);
  addf("scene.observer_xy_hi", sc.observer_xy.hi);
  addf("scene.observer_z_lo", sc.observer_z.lo);
  addf("scene.observer_z_hi", sc.observer_z.hi);
  addf("scene.ground_z", sc.ground_z);
  addf("scene.checker_period", sc.checker_period);
  addf("scene.billboard_w", sc.billboard_w);
  addf("scene.billboard_h", sc.billboard_h);
  add("scene.sky_tone", std::to_string(int(sc.sky_tone)));
  add("scene.ground_tone_a", std::to_string(int(sc.ground_tone_a)));
  add("scene.ground_tone_b", std::to_string(int(sc.ground_tone_b)));
  add("scene.seed", std::to_string(sc.seed));
  add("scene.groups", std::to_string(sc.n_groups));
  add("scene.state_schema", sc.state_schema);
  addf("scene.focal", in.f);
  add("scene.image_size", std::to_string(in.width));

  addf("augment.exposure_lo", ac.exposure.lo);
  addf("augment.exposure_hi", ac.exposure.hi);
  addf("augment.gamma_lo", ac.gamma.lo);
  addf("augment.gamma_hi", ac.gamma.hi);
  addf("augment.range_lo_lo", ac.range_lo.lo);
  addf("augment.range_lo_hi", ac.range_lo.hi);
  addf("augment.range_hi_lo", ac.range_hi.lo);
  addf("augment.range_hi_hi", ac.range_hi.hi);
  addf("augment.noise_sigma_lo", ac.noise_sigma.lo);
  addf("augment.noise_sigma_hi", ac.noise_sigma.hi);
  addf("augment.blur_sigma_lo", ac.blur_sigma.lo);
  addf("augment.blur_sigma_hi", ac.blur_sigma.hi);
  addf("augment.vignette_lo", ac.vignette.lo);
  addf("augment.vignette_hi", ac.vignette.hi);
  addf("augment.flip_prob", ac.flip_prob);
  addf("augment.pitch_range", ac.pitch_range);
  add("augment.copies", std::to_string(ac.copies));
  add("augment.seed", std::to_string(ac.seed));

  addf("train.learning_rate", tc.learning_rate);
  add("train.epochs", std::to_string(tc.epochs));
  add("train.batch_size", std::to_string(tc.batch_size));
  add("train.patience", std::to_string(tc.patience));
  add("train.seed", std::to_string(tc.seed));
  add("train.halt_on_patience", tc.halt_on_patience ? "true" : "false");
  add("train.qat_epochs", std::to_string(tc.qat.epochs));
  addf("train.qat_learning_rate", tc.qat.learning_rate);
  addf("train.qat_weight_decay", tc.qat.weight_decay);

  add("eval.batch_size", "256");
}

std::size_t ExperimentConfig::find(const std::string& key) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (items_[i].first == key) return i;
  return std::string::npos;
}

bool ExperimentConfig::has(const std::string& key) const {
  return find(key) != std::string::npos;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::size_t i = find(key);
  if (i == std::string::npos)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "unknown config key: " + key);
  items_[i].second = trim(value);
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(FormatError::Kind::Inconsistent,
                        path + ":" + std::to_string(lineno) +
                            ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  const std::size_t i = find(key);
  if (i == std::string::npos)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "unknown config key: " + key);
  return items_[i].second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw FormatError(FormatError::Kind::Inconsistent,
                      "config " + key + ": not a number: " + v);
  }
  if (pos != v.size() || !std::isfinite(d))
    throw FormatError(FormatError::Kind::Inconsistent,
                      "config " + key + ": not a number: " + v);
  return d;
}

int ExperimentConfig::get_int(const std::string& key) const {
  const double d = get_double(key);
  const int i = int(d);
  if (double(i) != d)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "config " + key + ": not an integer: " + get(key));
  return i;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    // stoull silently wraps negatives; digits only
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument(v);
    std::size_t pos = 0;
    const std::uint64_t u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw FormatError(FormatError::Kind::Inconsistent,
                      "config " + key + ": not an unsigned integer: " + v);
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError(FormatError::Kind::Inconsistent,
                    "config " + key + ": not a boolean: " + v);
}

std::string ExperimentConfig::render() const {
  std::ostringstream ss;
  ss << "# resolved configuration\n";
  std::string ns;
  for (const auto& [k, v] : items_) {
    const std::string cur = k.substr(0, k.find('.'));
    if (cur != ns) {
      if (!ns.empty()) ss << "\n";
      ns = cur;
    }
    ss << k << " = " << v << "\n";
  }
  return ss.str();
}

void ExperimentConfig::echo(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << render();
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

SceneConfig ExperimentConfig::scene_config() const {
  SceneConfig sc;
  sc.x = {get_double("scene.x_lo"), get_double("scene.x_hi")};
  sc.y = {get_double("scene.y_lo"), get_double("scene.y_hi")};
  sc.z = {get_double("scene.z_lo"), get_double("scene.z_hi")};
  sc.phi = {get_double("scene.phi_lo"), get_double("scene.phi_hi")};
  sc.pitch = {get_double("scene.pitch_lo"), get_double("scene.pitch_hi")};
  sc.roll = {get_double("scene.roll_lo"), get_double("scene.roll_hi")};
  sc.observer_xy = {get_double("scene.observer_xy_lo"),
                    get_double("scene.observer_xy_hi")};
  sc.observer_z = {get_double("scene.observer_z_lo"),
                   get_double("scene.observer_z_hi")};
  sc.ground_z = get_double("scene.ground_z");
  sc.checker_period = get_double("scene.checker_period");
  sc.billboard_w = get_double("scene.billboard_w");
  sc.billboard_h = get_double("scene.billboard_h");
  sc.sky_tone = std::uint8_t(get_int("scene.sky_tone"));
  sc.ground_tone_a = std::uint8_t(get_int("scene.ground_tone_a"));
  sc.ground_tone_b = std::uint8_t(get_int("scene.ground_tone_b"));
  sc.seed = get_u64("scene.seed");
  sc.n_groups = get_int("scene.groups");
  sc.state_schema = get("scene.state_schema");
  if (sc.state_schema != "pitch" && sc.state_schema != "pitch_roll")
    throw FormatError(FormatError::Kind::Inconsistent,
                      "config scene.state_schema: expected pitch or "
                      "pitch_roll, got " +
                          sc.state_schema);
  return sc;
}

CameraIntrinsics ExperimentConfig::intrinsics() const {
  CameraIntrinsics in;
  in.width = in.height = get_int("scene.image_size");
  in.f = get_double("scene.focal");
  in.cx = in.width / 2.0;
  in.cy = in.height / 2.0;
  return in;
}

AugmentConfig ExperimentConfig::augment_config() const {
  AugmentConfig ac;
  ac.exposure = {get_double("augment.exposure_lo"),
                 get_double("augment.exposure_hi")};
  ac.gamma = {get_double("augment.gamma_lo"), get_double("augment.gamma_hi")};
  ac.range_lo = {get_double("augment.range_lo_lo"),
                 get_double("augment.range_lo_hi")};
  ac.range_hi = {get_double("augment.range_hi_lo"),
                 get_double("augment.range_hi_hi")};
  ac.noise_sigma = {get_double("augment.noise_sigma_lo"),
                    get_double("augment.noise_sigma_hi")};
  ac.blur_sigma = {get_double("augment.blur_sigma_lo"),
                   get_double("augment.blur_sigma_hi")};
  ac.vignette = {get_double("augment.vignette_lo"),
                 get_double("augment.vignette_hi")};
  ac.flip_prob = get_double("augment.flip_prob");
  ac.pitch_range = get_double("augment.pitch_range");
  ac.copies = get_int("augment.copies");
  ac.seed = get_u64("augment.seed");
  return ac;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.learning_rate = get_double("train.learning_rate");
  tc.epochs = get_int("train.epochs");
  tc.batch_size = get_int("train.batch_size");
  tc.patience = get_int("train.patience");
  tc.seed = get_u64("train.seed");
  tc.halt_on_patience = get_bool("train.halt_on_patience");
  tc.qat.epochs = get_int("train.qat_epochs");
  tc.qat.learning_rate = get_double("train.qat_learning_rate");
  tc.qat.weight_decay = get_double("train.qat_weight_decay");
  return tc;
}

}  // namespace vsf
