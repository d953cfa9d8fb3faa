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

// Verification suites shared by the command-line tool and the acceptance
// runner: Monte Carlo checks of the collision-probability bound chain and an
// exhaustive-enumeration oracle for the scale projection QP.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vrbf/chance.hpp"
#include "vrbf/qp.hpp"

namespace vrbf::verify {

struct OracleResult {
  Vec2 delta = Vec2::Zero();
  double objective = std::numeric_limits<double>::infinity();
};

/// Enumerates every subset of rows as the equality-active set, solves the
/// equality-constrained least-distance problem by minimum-norm least squares
/// and keeps the best feasible candidate. Exponential in the row count.
inline std::optional<OracleResult> enumerate_active_sets(
    const ProjectionProblem& p, double feas_tol = 1e-9) {
  const std::size_t m = p.rows.size();
  std::optional<OracleResult> best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    Eigen::MatrixXd a(0, 2);
    Eigen::VectorXd h(0);
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask & (std::size_t{1} << k))) continue;
      a.conservativeResize(a.rows() + 1, Eigen::NoChange);
      h.conservativeResize(h.size() + 1);
      a.row(a.rows() - 1) = p.rows[k].a.transpose();
      h(h.size() - 1) = p.rows[k].b - p.rows[k].a.dot(p.current_scale);
    }
    Vec2 x = p.target;
    if (a.rows() > 0) {
      // x = target + A^T y with (A A^T) y = h - A target, min-norm y.
      const Eigen::MatrixXd gram = a * a.transpose();
      const Eigen::VectorXd rhs = h - a * p.target;
      const Eigen::VectorXd y =
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).solve(rhs);
      x = p.target + a.transpose() * y;
      if (((a * x - h).array().abs() > 1e-9 * (1 + h.cwiseAbs().maxCoeff()))
              .any()) {
        continue;  // inconsistent equality system
      }
    }
    bool feasible = true;
    for (const auto& row : p.rows) {
      if (row.a.dot(p.current_scale + x) < row.b - feas_tol) feasible = false;
    }
    if (!feasible) continue;
    const double obj = 0.5 * (p.target - x).squaredNorm();
    if (!best || obj < best->objective) best = OracleResult{x, obj};
  }
  return best;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random feasible projection problem: rows are built around a point x0 that
/// satisfies all of them, with some rows tight and some parallel.
inline ProjectionProblem random_projection_problem(std::mt19937_64& rng,
                                                   std::size_t max_rows = 6) {
  auto vec2 = [&](double lo, double hi) {
    const double x = uniform(rng, lo, hi);
    return Vec2(x, uniform(rng, lo, hi));
  };
  ProjectionProblem p;
  p.current_scale = vec2(0.1, 3.0);
  p.target = vec2(-3.0, 3.0);
  const Vec2 x0 = vec2(-1.0, 1.0);
  const auto m = std::uniform_int_distribution<std::size_t>(0, max_rows)(rng);
  for (std::size_t k = 0; k < m; ++k) {
    Vec2 a = vec2(-2.0, 2.0);
    if (k > 0 && uniform(rng, 0, 1) < 0.15) {
      const auto src = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      a = p.rows[src].a * uniform(rng, 0.5, 2.0);
    }
    if (a.norm() < 1e-3) a = Vec2(1.0, 0.0);
    const double slack = uniform(rng, 0, 1) < 0.3 ? 0.0 : uniform(rng, 0.0, 1.0);
    p.rows.push_back({a, a.dot(p.current_scale + x0) - slack});
  }
  return p;
}

/// Smallest row slack a^T (s + delta) - b; +inf without rows.
inline double min_slack(const ProjectionProblem& p, const Vec2& delta) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : p.rows) {
    worst = std::min(worst, r.a.dot(p.current_scale + delta) - r.b);
  }
  return worst;
}

struct QpSuiteOptions {
  std::size_t problems = 1000;
  std::uint64_t seed = 4242;
  double objective_tol = 1e-8;
  double feasibility_tol = 1e-9;
};

struct QpSuiteReport {
  std::size_t problems = 0;
  std::size_t failures = 0;
  double max_objective_gap = 0.0;
  double worst_slack = std::numeric_limits<double>::infinity();
  bool passed() const { return failures == 0; }
};

inline QpSuiteReport run_qp_suite(const QpSuiteOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  QpSuiteReport rep;
  for (std::size_t t = 0; t < opt.problems; ++t) {
    const auto p = random_projection_problem(rng);
    const auto sol = project_scale_derivative(p);
    const auto oracle = enumerate_active_sets(p);
    ++rep.problems;
    if (!oracle || sol.status != SolveStatus::kOptimal) {
      ++rep.failures;
      continue;
    }
    const double gap =
        std::abs(0.5 * (p.target - sol.delta).squaredNorm() - oracle->objective);
    const double slack = min_slack(p, sol.delta);
    rep.max_objective_gap = std::max(rep.max_objective_gap, gap);
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (gap > opt.objective_tol || slack < -opt.feasibility_tol) ++rep.failures;
  }
  return rep;
}

struct BoundSuiteOptions {
  double p_coll = 1.5e-3;
  std::size_t samples = 100000;
  std::size_t instances = 200;
  std::uint64_t seed = 2026;
};

struct CalibrationCase {
  double variance = 0.0;  // per robot, isotropic
  ProbabilityEstimate estimate;
  bool passed = false;
};

struct BoundSuiteReport {
  double xi = 0.0;
  double p_coll = 0.0;
  std::size_t instances = 0;
  /// Instances where the halfspace mass fell below MC - 3 stderr.
  std::size_t hyperplane_failures = 0;
  /// min over instances of halfspace mass - (MC - 3 stderr).
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<CalibrationCase> calibration;

  double max_calibrated_probability() const {
    double m = 0.0;
    for (const auto& c : calibration) m = std::max(m, c.estimate.probability);
    return m;
  }
  bool passed() const {
    return hyperplane_failures == 0 &&
           std::all_of(calibration.begin(), calibration.end(),
                       [](const CalibrationCase& c) { return c.passed; });
  }
};

/// Per-robot isotropic variances for pairs placed exactly at the bound.
inline constexpr double kCalibrationVariances[] = {0.001, 0.004, 0.01, 0.03, 0.1};

inline BoundSuiteReport run_bound_suite(const BoundSuiteOptions& opt = {}) {
  BoundSuiteReport rep;
  rep.p_coll = opt.p_coll;
  rep.xi = xi_from_pcoll(opt.p_coll);
  std::mt19937_64 rng(opt.seed);
  auto cov = [&] {
    const double angle = uniform(rng, 0.0, 3.141592653589793);
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const double e0 = uniform(rng, 0.0, 0.1);
    const Vec2 ev(e0, uniform(rng, 0.0, 0.1));
    Mat2 m = r * ev.asDiagonal() * r.transpose();
    m(1, 0) = m(0, 1);
    return m;
  };
  for (std::size_t k = 0; k < opt.instances; ++k) {
    const double mx = uniform(rng, -1, 1);
    const PositionBelief bi(Vec2(mx, uniform(rng, -1, 1)), cov());
    const double nx = uniform(rng, -1, 1);
    const PositionBelief bj(Vec2(nx, uniform(rng, -1, 1)), cov());
    const double ri = uniform(rng, 0.05, 0.3);
    const double rj = uniform(rng, 0.05, 0.3);
    const double eps = uniform(rng, 0.0, 0.2);
    const auto est = mc_collision_probability(bi, bj, ri, rj, eps, opt.samples,
                                              opt.seed * 1000003 + k);
    const double margin = hyperplane_probability(bi, bj, ri, rj, eps) -
                          (est.probability - 3.0 * est.standard_error);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    rep.hyperplane_failures += margin < 0.0;
    ++rep.instances;
  }
  const double r = 0.25;
  const double eps = 0.1;
  std::uint64_t stream = 0;
  for (const double var : kCalibrationVariances) {
    const double d = min_distance_bound(r, r, eps, rep.xi, 2.0 * var);
    const PositionBelief bi(Vec2::Zero(), var * Mat2::Identity());
    const PositionBelief bj(Vec2(d, 0.0), var * Mat2::Identity());
    CalibrationCase c;
    c.variance = var;
    c.estimate = mc_collision_probability(bi, bj, r, r, eps, opt.samples,
                                          opt.seed + 77 + stream++);
    c.passed =
        c.estimate.probability <= opt.p_coll + 3.0 * c.estimate.standard_error;
    rep.calibration.push_back(c);
  }
  return rep;
}

}  // namespace vrbf::verify
