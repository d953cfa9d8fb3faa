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

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vrbf/types.hpp"

namespace vrbf {

inline constexpr double kDefaultScaleFloor = 1e-3;

/// Parameters of the virtual rigid body transform q = R(phi) diag(s) c + t.
///
/// phi is kept as a plain real (never wrapped) so that averaging parameters
/// across robots stays continuous.
class FormationParams {
 public:
  FormationParams() = default;

  FormationParams(double phi, const Vec2& scale, const Vec2& translation,
                  double scale_floor = kDefaultScaleFloor)
      : phi_(phi), scale_(scale), translation_(translation) {
    if (!std::isfinite(phi) || !scale.allFinite() || !translation.allFinite()) {
      throw Error(ErrorCode::kInvalidParams, "non-finite formation parameter");
    }
    if (scale.x() <= scale_floor || scale.y() <= scale_floor) {
      throw Error(ErrorCode::kInvalidParams,
                  "scale components must exceed the floor");
    }
  }

  /// Layout (phi, s_x, s_y, t_x, t_y).
  static FormationParams from_vector(const Vec5& v,
                                     double scale_floor = kDefaultScaleFloor) {
    return {v(0), Vec2(v(1), v(2)), Vec2(v(3), v(4)), scale_floor};
  }

  Vec5 to_vector() const {
    Vec5 v;
    v << phi_, scale_.x(), scale_.y(), translation_.x(), translation_.y();
    return v;
  }

  double phi() const { return phi_; }
  const Vec2& scale() const { return scale_; }
  const Vec2& translation() const { return translation_; }

  Mat2 rotation() const {
    const double c = std::cos(phi_);
    const double s = std::sin(phi_);
    Mat2 r;
    r << c, -s, s, c;
    return r;
  }

  bool operator==(const FormationParams&) const = default;

 private:
  double phi_ = 0.0;
  Vec2 scale_ = Vec2::Ones();
  Vec2 translation_ = Vec2::Zero();
};

/// Per-robot base points with zero centroid. Only constructible through
/// recenter_base, which establishes the invariants.
class BaseConfiguration {
 public:
  std::size_t size() const { return points_.size(); }
  const Vec2& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec2> points() const { return points_; }

 private:
  friend BaseConfiguration recenter_base(std::span<const Vec2> points);
  std::vector<Vec2> points_;
};

inline BaseConfiguration recenter_base(std::span<const Vec2> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kConfigurationInvalid, "empty base configuration");
  }
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) {
    if (!p.allFinite()) {
      throw Error(ErrorCode::kConfigurationInvalid, "non-finite base point");
    }
    centroid += p;
  }
  centroid /= static_cast<double>(points.size());

  BaseConfiguration base;
  base.points_.reserve(points.size());
  for (const auto& p : points) base.points_.push_back(p - centroid);

  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      if (base.points_[i] == base.points_[j]) {
        throw Error(ErrorCode::kConfigurationInvalid,
                    "base points " + std::to_string(i) + " and " +
                        std::to_string(j) + " coincide");
      }
    }
  }
  return base;
}

inline BaseConfiguration recenter_base(std::initializer_list<Vec2> points) {
  return recenter_base(std::span<const Vec2>(points.begin(), points.size()));
}

inline Vec2 transform_point(const FormationParams& eta, const Vec2& c) {
  return eta.rotation() * eta.scale().cwiseProduct(c) + eta.translation();
}

/// Partial derivatives of transform_point with respect to
/// (phi, s_x, s_y, t_x, t_y).
inline Mat25 jacobian(const FormationParams& eta, const Vec2& c) {
  const double cp = std::cos(eta.phi());
  const double sp = std::sin(eta.phi());
  const double sx = eta.scale().x();
  const double sy = eta.scale().y();
  Mat25 j;
  j << -sp * sx * c.x() - cp * sy * c.y(), cp * c.x(), -sp * c.y(), 1.0, 0.0,
      cp * sx * c.x() - sp * sy * c.y(), sp * c.x(), cp * c.y(), 0.0, 1.0;
  return j;
}

/// Right Moore-Penrose inverse J^T (J J^T)^-1.
inline Mat52 pseudo_inverse(const Mat25& j) {
  const Mat2 gram = j * j.transpose();
  // Symmetric 2x2: condition number from the closed-form eigenvalues.
  const double half_trace = 0.5 * gram.trace();
  const double disc = std::sqrt(std::max(
      0.0, 0.25 * (gram(0, 0) - gram(1, 1)) * (gram(0, 0) - gram(1, 1)) +
               gram(0, 1) * gram(1, 0)));
  const double lo = half_trace - disc;
  const double hi = half_trace + disc;
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw Error(ErrorCode::kDegenerateJacobian, "J J^T is numerically singular");
  }
  const double det = gram.determinant();
  Mat2 inv;
  inv << gram(1, 1), -gram(0, 1), -gram(1, 0), gram(0, 0);
  inv /= det;
  return j.transpose() * inv;
}

}  // namespace vrbf
