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

#include "vrbf/chance.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace vrbf {
namespace {

using testing::Gen;

PairConstraintQuadratic make_quad(const Mat2& gamma, double gamma_scalar) {
  PairConstraintQuadratic q;
  q.gamma_matrix = gamma;
  q.gamma_scalar = gamma_scalar;
  return q;
}

TEST(PositionBelief, ValidatesCovariance) {
  EXPECT_NO_THROW(PositionBelief(Vec2(1, 2), Mat2::Zero()));
  Mat2 asym;
  asym << 1, 0.1, 0, 1;
  EXPECT_THROW(PositionBelief(Vec2::Zero(), asym), Error);
  Mat2 indefinite;
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(PositionBelief(Vec2::Zero(), indefinite), Error);
  EXPECT_THROW(PositionBelief(Vec2::Zero(), -Mat2::Identity()), Error);
}

TEST(MaxEigenvalue, ClosedFormMatchesSolver) {
  Gen gen(8);
  for (int trial = 0; trial < 500; ++trial) {
    const Mat2 m = gen.covariance(0.0, 5.0);
    Eigen::SelfAdjointEigenSolver<Mat2> eig(m);
    EXPECT_NEAR(max_eigenvalue(m), eig.eigenvalues().maxCoeff(), 1e-12);
  }
  EXPECT_DOUBLE_EQ(max_eigenvalue(Vec2(0.04, 0.01).asDiagonal()), 0.04);
}

TEST(PairQuadratic, HandArithmetic) {
  const auto q = pair_quadratic(Vec2(-1, 0), Vec2(1, 0), 0.25, 0.25, 0.1, 3.0,
                                Vec2(0.01, 0.0).asDiagonal());
  EXPECT_EQ(q.gamma_matrix, Mat2(Vec2(4, 0).asDiagonal()));
  EXPECT_NEAR(q.gamma_scalar, 0.81, 1e-15);
}

TEST(PairQuadratic, NoiselessReduction) {
  const auto zero_xi = pair_quadratic(Vec2(0, 0), Vec2(1, 2), 0.3, 0.2, 0.1,
                                      0.0, Mat2::Identity());
  EXPECT_NEAR(zero_xi.gamma_scalar, 0.36, 1e-15);
  const auto zero_sigma = pair_quadratic(Vec2(0, 0), Vec2(1, 2), 0.3, 0.2, 0.1,
                                         3.0, Mat2::Zero());
  EXPECT_NEAR(zero_sigma.gamma_scalar, 0.36, 1e-15);
  EXPECT_EQ(zero_sigma.gamma_matrix, Mat2(Vec2(1, 4).asDiagonal()));
}

TEST(PairQuadratic, UsesLargestPairEigenvalue) {
  // sqrt(0.04) = 0.2, so the bound is 0.5 + 0.2 and gamma = 0.49.
  const auto q = pair_quadratic(Vec2(0, 0), Vec2(1, 0), 0.2, 0.2, 0.1, 1.0,
                                Vec2(0.04, 0.01).asDiagonal());
  EXPECT_NEAR(q.gamma_scalar, 0.49, 1e-15);
}

TEST(PairQuadratic, Errors) {
  try {
    pair_quadratic(Vec2(1, 1), Vec2(1, 1), 0.1, 0.1, 0.1, 3, Mat2::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegeneratePair);
  }
  Mat2 bad;
  bad << 1, 3, 3, 1;
  try {
    pair_quadratic(Vec2(0, 0), Vec2(1, 1), 0.1, 0.1, 0.1, 3, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidCovariance);
  }
}

TEST(MinDistanceBound, Examples) {
  EXPECT_NEAR(min_distance_bound(0.25, 0.25, 0.1, 3, 0.01), 0.9, 1e-15);
  EXPECT_DOUBLE_EQ(min_distance_bound(0.25, 0.3, 0.1, 3, 0.0), 0.65);
  EXPECT_EQ(min_distance_bound(0, 0, 0, 0, 0), 0.0);
}

TEST(Linearize, AxisAlignedPairIsExactBoundary) {
  const auto row =
      linearize(make_quad(Vec2(4, 0).asDiagonal(), 0.81), Vec2(1, 1));
  EXPECT_NEAR(row.a.x(), 4.0, 1e-15);
  EXPECT_EQ(row.a.y(), 0.0);
  // alpha = 0.1375 (smaller root of 64 a^2 - 32 a + 3.19).
  EXPECT_NEAR(row.b, 1.8, 1e-12);
  EXPECT_NEAR(row.b / row.a.x(), 0.45, 1e-12);
  EXPECT_FALSE(row.fallback);
}

TEST(Linearize, TangentOnBoundary) {
  const auto row = linearize(make_quad(Mat2::Identity(), 1.0), Vec2(1, 0));
  EXPECT_EQ(row.a, Vec2(1, 0));
  EXPECT_NEAR(row.b, 1.0, 1e-15);
}

TEST(Linearize, ScaledInputHitsSameBoundaryPoint) {
  const auto row = linearize(make_quad(Mat2::Identity(), 1.0), Vec2(2, 0));
  EXPECT_EQ(row.a, Vec2(2, 0));
  EXPECT_NEAR(row.b / row.a.norm(), 1.0, 1e-15);
}

TEST(Linearize, ComplexRootsReportedAndFallbackIsTangent) {
  // Ray s - alpha Gamma s passes beside the ellipse.
  const auto quad = make_quad(Vec2(1, 0.01).asDiagonal(), 0.5);
  const Vec2 s(0.1, 10.0);
  EXPECT_FALSE(try_linearize(quad, s).has_value());
  try {
    linearize(quad, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoRealRoot);
  }
  const auto row = radial_tangent(quad, s);
  EXPECT_TRUE(row.fallback);
  const Vec2 s_star = s * std::sqrt(0.5 / quad.value(s));
  EXPECT_NEAR(quad.value(s_star), 0.5, 1e-12);
  EXPECT_LT((row.a - quad.gamma_matrix * s_star).norm(), 1e-15);
  EXPECT_NEAR(row.b, 0.5, 1e-12);
  EXPECT_GE(row.slack(s), 0.0);
}

TEST(Linearize, DegenerateLeadingCoefficient) {
  try {
    linearize(make_quad(Vec2(4, 0).asDiagonal(), 0.81), Vec2(0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateLinearization);
  }
}

TEST(Linearize, InnerApproximationAlongRayToBoundary) {
  Gen gen(314);
  int checked = 0;
  while (checked < 1000) {
    const Mat2 gamma = Vec2(gen.uniform(0, 4), gen.uniform(0, 4)).asDiagonal();
    if (gamma.diagonal().maxCoeff() < 1e-3) continue;
    const Vec2 s = gen.vec2(0.05, 3.0);
    const double value = s.dot(gamma * s);
    const auto quad = make_quad(gamma, gen.uniform(0.0, value));  // s feasible
    const auto row = try_linearize(quad, s);
    if (!row) continue;
    ++checked;
    // Linearization point satisfies its own row.
    EXPECT_GE(row->slack(s), -1e-9 * (1 + std::abs(row->b)));
    // Along s - tau Gamma s the linear row admits exactly tau <= alpha and
    // every such point satisfies the quadratic.
    const Vec2 dir = -(gamma * s);
    const double alpha = (row->a.dot(s) - row->b) / (-row->a.dot(dir));
    for (int k = 0; k <= 20; ++k) {
      const Vec2 p = s + (alpha * k / 20.0) * dir;
      EXPECT_GE(row->slack(p), -1e-9 * (1 + std::abs(row->b)));
      EXPECT_GE(quad.value(p), quad.gamma_scalar - 1e-9 * (1 + quad.gamma_scalar));
    }
  }
}

TEST(AssembleConstraints, Cardinality) {
  const auto pair_base = recenter_base({Vec2(-1, 0), Vec2(1, 0)});
  std::vector<PositionBelief> two(2);
  std::vector<double> r2(2, 0.25);
  EXPECT_EQ(assemble_constraints(Vec2(1, 1), two, pair_base, r2, 0.1, 3.0, 0)
                .rows.size(),
            1u);

  const auto square =
      recenter_base({Vec2(-1, -1), Vec2(1, -1), Vec2(-1, 1), Vec2(1, 1)});
  std::vector<PositionBelief> four(4);
  std::vector<double> r4(4, 0.25);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto set =
        assemble_constraints(Vec2(1, 1), four, square, r4, 0.1, 3.0, i);
    EXPECT_EQ(set.rows.size(), 3u);
    EXPECT_EQ(set.linearization_point, Vec2(1, 1));
    for (const auto& row : set.rows) EXPECT_NE(row.other, i);
  }
}

TEST(AssembleConstraints, ComposesPairAndLinearize) {
  const auto base = recenter_base({Vec2(-1, 0), Vec2(1, 0)});
  // Sigma_i + Sigma_j = diag(0.01, 0): lambda_max = 0.01.
  const std::vector<PositionBelief> beliefs = {
      PositionBelief(Vec2::Zero(), Vec2(0.005, 0).asDiagonal()),
      PositionBelief(Vec2::Zero(), Vec2(0.005, 0).asDiagonal())};
  const std::vector<double> radii = {0.25, 0.25};
  const auto set =
      assemble_constraints(Vec2(1, 1), beliefs, base, radii, 0.1, 3.0, 0);
  ASSERT_EQ(set.rows.size(), 1u);
  EXPECT_NEAR(set.rows[0].a.x(), 4.0, 1e-15);
  EXPECT_EQ(set.rows[0].a.y(), 0.0);
  EXPECT_NEAR(set.rows[0].b, 1.8, 1e-12);
  EXPECT_EQ(set.rows[0].other, 1u);
}

TEST(AssembleConstraints, LengthMismatch) {
  const auto base = recenter_base({Vec2(-1, 0), Vec2(1, 0)});
  std::vector<PositionBelief> one(1);
  std::vector<double> radii(2, 0.1);
  EXPECT_THROW(assemble_constraints(Vec2(1, 1), one, base, radii, 0.1, 3, 0),
               Error);
}

TEST(ConstraintSoundness, QuadraticImpliesDistanceBoundForAnyRotation) {
  Gen gen(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec2 ci = gen.vec2(-3, 3);
    const Vec2 cj = gen.vec2(-3, 3);
    const Mat2 sigma = gen.covariance(0.0, 0.05);
    const double r = gen.uniform(0.05, 0.4);
    const double eps = gen.uniform(0.0, 0.2);
    const double xi = gen.uniform(0.0, 4.0);
    const auto q = pair_quadratic(ci, cj, r, r, eps, xi, sigma);
    const FormationParams eta(gen.uniform(-10, 10), gen.vec2(0.05, 3),
                              gen.vec2(-5, 5));
    const Vec2 s = eta.scale();
    const double dist =
        (transform_point(eta, cj) - transform_point(eta, ci)).norm();
    // |R dC s|^2 = s^T Gamma s, whatever the rotation.
    EXPECT_NEAR(dist * dist, q.value(s), 1e-9 * (1 + q.value(s)));
    const double bound = min_distance_bound(r, r, eps, xi, max_eigenvalue(sigma));
    if (q.satisfied_by(s)) {
      EXPECT_GE(dist, bound - 1e-9);
    } else {
      EXPECT_LT(dist, bound + 1e-9);
    }
  }
}

TEST(HyperplaneProbability, MeanOnHyperplaneIsHalf) {
  const PositionBelief bi(Vec2(0, 0), 0.01 * Mat2::Identity());
  const PositionBelief bj(Vec2(0.6, 0), 0.02 * Mat2::Identity());
  EXPECT_NEAR(hyperplane_probability(bi, bj, 0.25, 0.25, 0.1), 0.5, 1e-15);
}

TEST(HyperplaneProbability, ThreeSigmaTail) {
  // Sigma_ij = 0.01 I, sigma = 0.1, mean distance d + 0.3.
  const PositionBelief bi(Vec2(0, 0), 0.005 * Mat2::Identity());
  const PositionBelief bj(Vec2(0, 0.9), 0.005 * Mat2::Identity());
  EXPECT_NEAR(hyperplane_probability(bi, bj, 0.25, 0.25, 0.1),
              0.0013498980316301, 1e-12);
}

TEST(HyperplaneProbability, FarFieldAndErrors) {
  const PositionBelief bi(Vec2(0, 0), 1e-4 * Mat2::Identity());
  const PositionBelief bj(Vec2(50, 0), 1e-4 * Mat2::Identity());
  EXPECT_LT(hyperplane_probability(bi, bj, 0.25, 0.25, 0.1), 1e-300);
  try {
    hyperplane_probability(bi, bi, 0.25, 0.25, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedNormal);
  }
}

TEST(MonteCarlo, FarApartIsZero) {
  const PositionBelief bi(Vec2(0, 0), 1e-4 * Mat2::Identity());
  const PositionBelief bj(Vec2(100, 0), 1e-4 * Mat2::Identity());
  const auto est = mc_collision_probability(bi, bj, 0.25, 0.25, 0.1, 10000, 1);
  EXPECT_EQ(est.probability, 0.0);
}

TEST(MonteCarlo, CoincidentMeansCollide) {
  const PositionBelief bi(Vec2(0, 0), 1e-3 * Mat2::Identity());
  const PositionBelief bj(Vec2(0, 0), 1e-3 * Mat2::Identity());
  const auto est = mc_collision_probability(bi, bj, 1.0, 1.0, 0.1, 20000, 2);
  EXPECT_GE(est.probability, 1.0 - 3.0 * est.standard_error);
}

TEST(MonteCarlo, DeterministicForSeedAndNeedsSamples) {
  const PositionBelief bi(Vec2(0, 0), 0.02 * Mat2::Identity());
  const PositionBelief bj(Vec2(0.5, 0.2), 0.03 * Mat2::Identity());
  const auto a = mc_collision_probability(bi, bj, 0.2, 0.2, 0.1, 20000, 42);
  const auto b = mc_collision_probability(bi, bj, 0.2, 0.2, 0.1, 20000, 42);
  EXPECT_EQ(a.probability, b.probability);
  EXPECT_THROW(mc_collision_probability(bi, bj, 0.2, 0.2, 0.1, 9999, 42), Error);
}

TEST(MonteCarlo, BoundAtMinimumDistanceWithIsotropicCovariance) {
  const double p_bar = 1.5e-3;
  const double xi = xi_from_pcoll(p_bar);
  const double var = 0.004;  // per robot; Sigma_ij = 0.008 I
  const double d = min_distance_bound(0.25, 0.25, 0.1, xi, 2 * var);
  const PositionBelief bi(Vec2(0, 0), var * Mat2::Identity());
  const PositionBelief bj(Vec2(d / std::sqrt(2.0), d / std::sqrt(2.0)),
                          var * Mat2::Identity());
  const auto est = mc_collision_probability(bi, bj, 0.25, 0.25, 0.1, 200000, 9);
  EXPECT_LE(est.probability, p_bar + 3.0 * est.standard_error);
  EXPECT_NEAR(hyperplane_probability(bi, bj, 0.25, 0.25, 0.1), p_bar, 1e-9);
}

TEST(MonteCarlo, HyperplaneUpperBoundsBall) {
  Gen gen(1234);
  for (int trial = 0; trial < 40; ++trial) {
    const PositionBelief bi(gen.vec2(-1, 1), gen.covariance(0.0, 0.1));
    const PositionBelief bj(gen.vec2(-1, 1), gen.covariance(0.0, 0.1));
    const double ri = gen.uniform(0.05, 0.3);
    const double rj = gen.uniform(0.05, 0.3);
    const double eps = gen.uniform(0.0, 0.2);
    const auto est =
        mc_collision_probability(bi, bj, ri, rj, eps, 20000, 100 + trial);
    EXPECT_GE(hyperplane_probability(bi, bj, ri, rj, eps),
              est.probability - 3.0 * est.standard_error);
  }
}

}  // namespace
}  // namespace vrbf
