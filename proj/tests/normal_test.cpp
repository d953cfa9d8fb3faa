// Copyright 2026 The vrbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vrbf/normal.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "vrbf/chance.hpp"

namespace vrbf {
namespace {

// Independent route through the inverse complementary error function,
// Q(p) = -sqrt(2) erfc^-1(2p), which avoids the cancellation in 2p - 1.
double quantile_oracle(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

TEST(NormalQuantile, MatchesInverseErfOracle) {
  double worst = 0.0;
  for (int k = 1; k <= 999; ++k) {
    const double p = k / 1000.0;
    worst = std::max(worst, std::abs(normal::quantile(p) - quantile_oracle(p)));
  }
  for (double p : {1e-12, 1e-9, 1e-6, 1e-4, 1.5e-3, 0.02425, 0.97575,
                   1 - 1e-6, 1 - 1e-9}) {
    worst = std::max(worst, std::abs(normal::quantile(p) - quantile_oracle(p)));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(NormalQuantile, InvertsCdf) {
  for (double x = -7.0; x <= 5.0; x += 0.25) {
    EXPECT_NEAR(normal::quantile(normal::cdf(x)), x, 1e-8) << x;
  }
}

TEST(NormalQuantile, DomainErrors) {
  EXPECT_THROW(normal::quantile(0.0), Error);
  EXPECT_THROW(normal::quantile(1.0), Error);
  EXPECT_THROW(normal::quantile(std::nan("")), Error);
}

TEST(XiFromPcoll, MedianIsZero) { EXPECT_EQ(xi_from_pcoll(0.5), 0.0); }

TEST(XiFromPcoll, OneSigma) {
  // Phi(1) = 0.841345, so a 0.158655 tail sits one standard deviation out.
  EXPECT_NEAR(xi_from_pcoll(0.158655), 1.0, 1e-4);
}

TEST(XiFromPcoll, OperatingPointFollowsQuantile) {
  // 1 - 2 * 1.5e-3 = 0.997 two-sided coverage.
  const double xi = xi_from_pcoll(1.5e-3);
  EXPECT_NEAR(xi, quantile_oracle(1.0 - 1.5e-3), 1e-9);
  EXPECT_NEAR(xi, 2.9677379253417944, 1e-9);
  EXPECT_NEAR(2.0 * normal::cdf(xi) - 1.0, 0.997, 1e-12);
}

TEST(XiFromPcoll, MonotoneDecreasing) {
  double prev = INFINITY;
  for (double p = 1e-6; p <= 0.5; p *= 1.3) {
    const double xi = xi_from_pcoll(p);
    EXPECT_LT(xi, prev);
    prev = xi;
  }
}

TEST(XiFromPcoll, DomainErrors) {
  for (double p : {0.0, -0.1, 0.5000001, 1.0}) {
    try {
      xi_from_pcoll(p);
      FAIL() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
}

}  // namespace
}  // namespace vrbf
