#pragma once

#include <vector>

#include "vsf/poses.hpp"

namespace vsf {

/// Coefficient of determination: 1 - sum (y-yhat)^2 / sum (y-ybar)^2.
/// May be arbitrarily negative. Throws NumericError on zero-variance
/// targets or fewer than 2 points.
double r2_score(const std::vector<double>& y, const std::vector<double>& yhat);

double mse(const std::vector<double>& y, const std::vector<double>& yhat);
double mae(const std::vector<double>& y, const std::vector<double>& yhat);

/// Population variance of y: the MSE of the mean-predicting dummy
/// regressor.
double dummy_mse(const std::vector<double>& y);

/// Mean quaternionic distance in degrees; predictions are normalized
/// before comparison. Throws NumericError on a zero-norm prediction.
double mean_rotation_error_deg(const std::vector<Quaternion>& truth,
                               const std::vector<Quaternion>& pred);

double median(std::vector<double> values);

}  // namespace vsf
