#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "vsf/errors.hpp"
#include "vsf/metrics.hpp"
#include "vsf/rng.hpp"

using namespace vsf;

TEST_CASE("r2_score examples") {
  std::vector<double> y{0, 1, 2, 3};
  CHECK(r2_score(y, y) == doctest::Approx(1.0));
  const double mean = 1.5;
  CHECK(r2_score(y, {mean, mean, mean, mean}) == doctest::Approx(0.0));
  // hand evaluation: 1 - 14/5
  CHECK(r2_score(y, {0, 0, 0, 0}) == doctest::Approx(-1.8));
}

TEST_CASE("r2_score defined errors") {
  CHECK_THROWS_AS(r2_score({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), NumericError);
  CHECK_THROWS_AS(r2_score({1.0}, {1.0}), NumericError);
}

TEST_CASE("mse, mae, dummy_mse") {
  std::vector<double> y{0, 2};
  CHECK(dummy_mse(y) == doctest::Approx(1.0));  // population variance
  CHECK(mse(y, y) == 0.0);
  CHECK(mae(y, y) == 0.0);
  CHECK(mse({1, 2}, {2, 4}) == doctest::Approx((1.0 + 4.0) / 2));
  CHECK(mae({1, 2}, {2, 4}) == doctest::Approx(1.5));
}

TEST_CASE("consistency identity r2 = 1 - mse/dummy_mse") {
  SplitMix64 rng(111);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + int(rng.uniform_u64(50));
    std::vector<double> y(n), yh(n);
    for (int i = 0; i < n; ++i) {
      y[i] = rng.uniform(-10, 10);
      yh[i] = rng.uniform(-10, 10);
    }
    const double lhs = r2_score(y, yh);
    const double rhs = 1.0 - mse(y, yh) / dummy_mse(y);
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("mean_rotation_error_deg") {
  const Quaternion id{};
  const Quaternion z90 = quat_from_euler(0, 0, 1.5707963267948966);
  SUBCASE("identical lists") {
    CHECK(mean_rotation_error_deg({id, z90}, {id, z90}) ==
          doctest::Approx(0.0));
  }
  SUBCASE("negated predictions, double cover") {
    CHECK(mean_rotation_error_deg({id, z90}, {-id, -z90}) ==
          doctest::Approx(0.0));
  }
  SUBCASE("half identity pairs, half 90 degrees apart") {
    CHECK(mean_rotation_error_deg({id, id}, {id, z90}) ==
          doctest::Approx(45.0));
  }
  SUBCASE("unnormalized predictions are normalized first") {
    const Quaternion big{0, 0, 0, 7.5};
    CHECK(mean_rotation_error_deg({id}, {big}) == doctest::Approx(0.0));
  }
  SUBCASE("zero-norm prediction is a defined error") {
    CHECK_THROWS_AS(
        mean_rotation_error_deg({id}, {Quaternion{0, 0, 0, 0}}),
        NumericError);
  }
  SUBCASE("invariant to negating any subset of predictions") {
    SplitMix64 rng(112);
    std::vector<Quaternion> truth, pred;
    for (int i = 0; i < 8; ++i) {
      Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      Quaternion p{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      truth.push_back(q.normalized());
      pred.push_back(p.normalized());
    }
    const double base = mean_rotation_error_deg(truth, pred);
    auto negated = pred;
    for (int i = 0; i < 8; i += 2) negated[i] = -negated[i];
    CHECK(mean_rotation_error_deg(truth, negated) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("median matches a sort-based oracle") {
  SplitMix64 rng(113);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + int(rng.uniform_u64(20));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-5, 5);
    auto s = v;
    std::sort(s.begin(), s.end());
    const double want =
        n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    CHECK(median(v) == doctest::Approx(want).epsilon(1e-15));
  }
}
