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

#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "vrbf/types.hpp"

namespace vrbf::normal {

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
inline constexpr std::array<double, 6> kCentralNum = {
    -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
    1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
inline constexpr std::array<double, 5> kCentralDen = {
    -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
    6.680131188771972e+01, -1.328068155288572e+01};
inline constexpr std::array<double, 6> kTailNum = {
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
    -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
inline constexpr std::array<double, 4> kTailDen = {
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
    3.754408661907416e+00};
inline constexpr double kTailSplit = 0.02425;

inline double lower_tail(double p) {
  const double q = std::sqrt(-2.0 * std::log(p));
  const auto& c = kTailNum;
  const auto& d = kTailDen;
  return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

inline double rational_quantile(double p) {
  if (p < kTailSplit) return lower_tail(p);
  if (p > 1.0 - kTailSplit) return -lower_tail(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  const auto& a = kCentralNum;
  const auto& b = kCentralDen;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Standard-normal quantile for p in (0, 1). One Halley step on top of the
/// rational approximation brings the error to a few ulps; the upper half is
/// reflected so the refinement always runs where the cdf is accurate.
inline double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomain, "quantile argument must lie in (0, 1)");
  }
  if (p > 0.5) return -quantile(1.0 - p);
  const double x = detail::rational_quantile(p);
  const double e = cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace vrbf::normal
