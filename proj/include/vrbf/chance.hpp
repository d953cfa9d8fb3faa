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

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vrbf/normal.hpp"
#include "vrbf/types.hpp"
#include "vrbf/vrb.hpp"

namespace vrbf {

/// Gaussian position estimate of one robot.
class PositionBelief {
 public:
  PositionBelief() = default;

  PositionBelief(const Vec2& mean, const Mat2& covariance)
      : mean_(mean), covariance_(covariance) {
    if (!mean.allFinite() || !covariance.allFinite()) {
      throw Error(ErrorCode::kInvalidCovariance, "non-finite belief");
    }
    if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12) {
      throw Error(ErrorCode::kInvalidCovariance, "covariance is not symmetric");
    }
    if (covariance(0, 0) < 0.0 || covariance(1, 1) < 0.0 ||
        covariance.determinant() < -1e-15) {
      throw Error(ErrorCode::kInvalidCovariance,
                  "covariance is not positive semidefinite");
    }
  }

  const Vec2& mean() const { return mean_; }
  const Mat2& covariance() const { return covariance_; }

 private:
  Vec2 mean_ = Vec2::Zero();
  Mat2 covariance_ = Mat2::Zero();
};

/// Larger eigenvalue of a symmetric 2x2 matrix, closed form.
inline double max_eigenvalue(const Mat2& m) {
  const double mid = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  return mid + std::hypot(half_diff, m(0, 1));
}

/// Two-sided interval half-width: the +/- xi sigma band has coverage
/// 1 - 2 p_coll.
inline double xi_from_pcoll(double p_coll_bound) {
  if (!(p_coll_bound > 0.0 && p_coll_bound <= 0.5)) {
    throw Error(ErrorCode::kDomain, "collision bound must lie in (0, 0.5]");
  }
  return normal::quantile(1.0 - p_coll_bound);
}

inline double min_distance_bound(double r_i, double r_j, double epsilon,
                                 double xi, double lambda_max) {
  return r_i + r_j + epsilon + xi * std::sqrt(std::max(0.0, lambda_max));
}

/// Rotation-invariant pair constraint s^T Gamma s >= gamma on the scale.
struct PairConstraintQuadratic {
  Mat2 gamma_matrix = Mat2::Zero();
  double gamma_scalar = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;

  double value(const Vec2& s) const { return s.dot(gamma_matrix * s); }
  bool satisfied_by(const Vec2& s, double tol = 0.0) const {
    return value(s) >= gamma_scalar - tol;
  }
};

inline PairConstraintQuadratic pair_quadratic(const Vec2& c_i, const Vec2& c_j,
                                              double r_i, double r_j,
                                              double epsilon, double xi,
                                              const Mat2& sigma_pair,
                                              std::size_t i = 0,
                                              std::size_t j = 1) {
  const Vec2 d = c_j - c_i;
  PairConstraintQuadratic q;
  q.gamma_matrix = d.cwiseProduct(d).asDiagonal();
  if (q.gamma_matrix(0, 0) < 1e-12 && q.gamma_matrix(1, 1) < 1e-12) {
    throw Error(ErrorCode::kDegeneratePair,
                "base points of pair (" + std::to_string(i) + ", " +
                    std::to_string(j) + ") coincide");
  }
  if (!sigma_pair.allFinite() ||
      std::abs(sigma_pair(0, 1) - sigma_pair(1, 0)) > 1e-12 ||
      sigma_pair(0, 0) < 0.0 || sigma_pair(1, 1) < 0.0 ||
      sigma_pair.determinant() < -1e-15) {
    throw Error(ErrorCode::kInvalidCovariance,
                "pair covariance is not symmetric positive semidefinite");
  }
  const double bound =
      min_distance_bound(r_i, r_j, epsilon, xi, max_eigenvalue(sigma_pair));
  q.gamma_scalar = bound * bound;
  q.i = i;
  q.j = j;
  return q;
}

/// Halfspace a^T s >= b on the scale parameters.
struct ConstraintRow {
  Vec2 a = Vec2::Zero();
  double b = 0.0;
  /// Index of the other robot of the pair that produced the row.
  std::size_t other = 0;
  /// True when the row came from the radial-projection fallback.
  bool fallback = false;

  double slack(const Vec2& s) const { return a.dot(s) - b; }
};

struct ScaleConstraintSet {
  std::vector<ConstraintRow> rows;
  Vec2 linearization_point = Vec2::Zero();
};

/// Linearization along the ray s - alpha Gamma s. Returns nullopt when that
/// ray misses the ellipse (negative discriminant).
inline std::optional<ConstraintRow> try_linearize(
    const PairConstraintQuadratic& quad, const Vec2& s) {
  const Mat2& g = quad.gamma_matrix;
  const Vec2 gs = g * s;
  const double s_g_s = s.dot(gs);
  const double s_gg_s = gs.dot(gs);
  const double s_ggg_s = gs.dot(g * gs);

  const double qa = s_ggg_s;
  const double qb = -2.0 * s_gg_s;
  const double qc = s_g_s - quad.gamma_scalar;
  if (!(qa > 1e-15)) {
    throw Error(ErrorCode::kDegenerateLinearization,
                "leading coefficient of the step-length quadratic vanishes");
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::nullopt;

  // Smaller root in the cancellation-free form; qb < 0 always.
  const double alpha = 2.0 * qc / (-qb + std::sqrt(disc));
  ConstraintRow row;
  row.a = gs;
  row.b = s_g_s - alpha * s_gg_s;
  row.other = quad.j;
  return row;
}

inline ConstraintRow linearize(const PairConstraintQuadratic& quad,
                               const Vec2& s) {
  if (auto row = try_linearize(quad, s)) return *row;
  throw Error(ErrorCode::kNoRealRoot,
              "step-length quadratic has complex roots");
}

/// Tangent halfspace at the radial projection s* of s onto s^T Gamma s = gamma.
inline ConstraintRow radial_tangent(const PairConstraintQuadratic& quad,
                                    const Vec2& s) {
  const double value = quad.value(s);
  if (!(value > 0.0)) {
    throw Error(ErrorCode::kDegenerateLinearization,
                "scale lies on the null direction of the pair constraint");
  }
  const Vec2 s_star = s * std::sqrt(quad.gamma_scalar / value);
  ConstraintRow row;
  row.a = quad.gamma_matrix * s_star;
  row.b = s_star.dot(row.a);
  row.other = quad.j;
  row.fallback = true;
  return row;
}

/// One row per other robot, linearized at the scale s of robot self_index.
inline ScaleConstraintSet assemble_constraints(
    const Vec2& s, std::span<const PositionBelief> beliefs,
    const BaseConfiguration& base, std::span<const double> radii,
    double epsilon, double xi, std::size_t self_index) {
  const std::size_t n = base.size();
  if (beliefs.size() != n || radii.size() != n || self_index >= n) {
    throw Error(ErrorCode::kConfigurationInvalid,
                "beliefs, radii and base configuration disagree in length");
  }
  ScaleConstraintSet set;
  set.linearization_point = s;
  set.rows.reserve(n - 1);
  const Mat2& sigma_self = beliefs[self_index].covariance();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == self_index) continue;
    const auto quad = pair_quadratic(
        base[self_index], base[j], radii[self_index], radii[j], epsilon, xi,
        sigma_self + beliefs[j].covariance(), self_index, j);
    auto row = try_linearize(quad, s);
    set.rows.push_back(row ? *row : radial_tangent(quad, s));
  }
  return set;
}

/// Monte Carlo estimate with its binomial standard error.
struct ProbabilityEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Symmetric square root of a PSD 2x2 matrix.
inline Mat2 psd_sqrt(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(m);
  const Vec2 root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Fraction of sampled relative positions inside the collision ball.
///
/// The standard error uses the add-one-each smoothed proportion
/// (k + 1) / (n + 2) so an estimate of exactly 0 or 1 still carries a
/// nonzero uncertainty.
inline ProbabilityEstimate mc_collision_probability(
    const PositionBelief& belief_i, const PositionBelief& belief_j, double r_i,
    double r_j, double epsilon, std::size_t samples, std::uint64_t rng_seed) {
  if (samples < 10000) {
    throw Error(ErrorCode::kDomain, "Monte Carlo needs at least 1e4 samples");
  }
  const Vec2 mean = belief_j.mean() - belief_i.mean();
  const Mat2 root = psd_sqrt(belief_i.covariance() + belief_j.covariance());
  const double radius = r_i + r_j + epsilon;
  const double radius_sq = radius * radius;

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vec2 z(gauss(rng), gauss(rng));
    const Vec2 delta = mean + root * z;
    if (delta.squaredNorm() <= radius_sq) ++hits;
  }
  const double n = static_cast<double>(samples);
  const double smoothed = (static_cast<double>(hits) + 1.0) / (n + 2.0);
  return {static_cast<double>(hits) / n,
          std::sqrt(smoothed * (1.0 - smoothed) / n), samples};
}

/// Gaussian mass of the halfspace n^T delta <= r_i + r_j + epsilon, which
/// contains the collision ball.
inline double hyperplane_probability(const PositionBelief& belief_i,
                                     const PositionBelief& belief_j,
                                     double r_i, double r_j, double epsilon) {
  const Vec2 mean = belief_j.mean() - belief_i.mean();
  const double distance = mean.norm();
  if (!(distance > 0.0)) {
    throw Error(ErrorCode::kUndefinedNormal,
                "mean distance vector is zero; hyperplane normal undefined");
  }
  const Vec2 normal = mean / distance;
  const double variance =
      normal.dot((belief_i.covariance() + belief_j.covariance()) * normal);
  const double bias = r_i + r_j + epsilon;
  if (variance <= 0.0) return distance <= bias ? 1.0 : 0.0;
  return normal::cdf((bias - distance) / std::sqrt(variance));
}

}  // namespace vrbf
