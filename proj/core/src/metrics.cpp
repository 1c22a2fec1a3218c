#include "vsf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vsf/errors.hpp"

namespace vsf {

namespace {

void check_pair(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.size() != yhat.size())
    throw std::invalid_argument("metric: length mismatch");
  if (y.empty()) throw std::invalid_argument("metric: empty input");
}

}  // namespace

double r2_score(const std::vector<double>& y, const std::vector<double>& yhat) {
  check_pair(y, yhat);
  if (y.size() < 2) throw NumericError("r2_score needs at least 2 points");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= double(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw NumericError("r2_score: zero-variance targets");
  return 1.0 - ss_res / ss_tot;
}

double mse(const std::vector<double>& y, const std::vector<double>& yhat) {
  check_pair(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / double(y.size());
}

double mae(const std::vector<double>& y, const std::vector<double>& yhat) {
  check_pair(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / double(y.size());
}

double dummy_mse(const std::vector<double>& y) {
  if (y.empty()) throw std::invalid_argument("dummy_mse: empty input");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= double(y.size());
  double s = 0.0;
  for (double v : y) s += (v - mean) * (v - mean);
  return s / double(y.size());
}

double mean_rotation_error_deg(const std::vector<Quaternion>& truth,
                               const std::vector<Quaternion>& pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("mean_rotation_error_deg: length mismatch");
  if (truth.empty())
    throw std::invalid_argument("mean_rotation_error_deg: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pred[i].norm() == 0.0)
      throw NumericError("mean_rotation_error_deg: zero-norm prediction");
    s += rotation_distance_deg(truth[i], pred[i].normalized());
  }
  return s / double(truth.size());
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace vsf
