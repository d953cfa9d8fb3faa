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
#include <limits>
#include <vector>

#include "vrbf/chance.hpp"
#include "vrbf/types.hpp"

namespace vrbf {

/// min 1/2 |target - delta|^2  s.t.  a_k^T (current_scale + delta) >= b_k.
struct ProjectionProblem {
  Vec2 target = Vec2::Zero();
  Vec2 current_scale = Vec2::Ones();
  std::vector<ConstraintRow> rows;
};

enum class SolveStatus { kOptimal, kInfeasibleFallback };

struct ActiveSetSolution {
  Vec2 delta = Vec2::Zero();
  std::vector<std::size_t> active_rows;
  /// Multipliers of active_rows in the units of the original rows.
  std::vector<double> multipliers;
  int iterations = 0;
  SolveStatus status = SolveStatus::kOptimal;
};

struct ActiveSetOptions {
  int max_iterations = 50;
  double feasibility_tol = 1e-12;
  double multiplier_tol = 1e-10;
};

/// Dual active-set method (Goldfarb-Idnani) specialised to an identity
/// Hessian in two variables. Starts from the unconstrained minimiser and adds
/// the most violated row each outer iteration, so no feasible start point is
/// needed and an empty feasible set is detected directly.
inline ActiveSetSolution project_scale_derivative(
    const ProjectionProblem& problem, const ActiveSetOptions& opts = {}) {
  if (!problem.target.allFinite() || !problem.current_scale.allFinite()) {
    throw Error(ErrorCode::kDomain, "non-finite projection problem");
  }
  const std::size_t m = problem.rows.size();
  std::vector<Vec2> normal(m);
  std::vector<double> rhs(m);
  std::vector<double> row_norm(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& row = problem.rows[k];
    if (!row.a.allFinite() || !std::isfinite(row.b)) {
      throw Error(ErrorCode::kDomain, "non-finite constraint row");
    }
    row_norm[k] = row.a.norm();
    if (!(row_norm[k] > 0.0)) {
      throw Error(ErrorCode::kDomain, "constraint row with zero normal");
    }
    normal[k] = row.a / row_norm[k];
    rhs[k] = (row.b - row.a.dot(problem.current_scale)) / row_norm[k];
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Vec2 x = problem.target;
  std::vector<std::size_t> active;
  std::vector<double> mult;
  ActiveSetSolution sol;

  auto infeasible = [&] {
    sol.delta.setZero();
    sol.active_rows.clear();
    sol.multipliers.clear();
    sol.status = SolveStatus::kInfeasibleFallback;
    return sol;
  };

  for (;;) {
    // Most violated inactive row; strict comparison keeps the lowest index.
    std::size_t p = m;
    double worst = -opts.feasibility_tol;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::find(active.begin(), active.end(), k) != active.end()) continue;
      const double v = normal[k].dot(x) - rhs[k];
      if (v < worst) {
        worst = v;
        p = k;
      }
    }
    if (p == m) break;

    double mult_p = 0.0;
    for (;;) {
      if (++sol.iterations > opts.max_iterations) {
        throw Error(ErrorCode::kSolverStall,
                    "active-set iteration cap exceeded");
      }
      const Vec2& np = normal[p];
      Vec2 z = Vec2::Zero();
      std::vector<double> r(active.size());
      if (active.empty()) {
        z = np;
      } else if (active.size() == 1) {
        const Vec2& n1 = normal[active[0]];
        r[0] = n1.dot(np);
        z = np - r[0] * n1;
      } else {
        Mat2 basis;
        basis << normal[active[0]], normal[active[1]];
        const Vec2 coeff = basis.partialPivLu().solve(np);
        r[0] = coeff(0);
        r[1] = coeff(1);
      }
      if (z.norm() <= 1e-12) z.setZero();

      double t_dual = kInf;
      std::size_t drop = active.size();
      for (std::size_t l = 0; l < active.size(); ++l) {
        if (r[l] > opts.multiplier_tol) {
          const double ratio = mult[l] / r[l];
          if (ratio < t_dual) {
            t_dual = ratio;
            drop = l;
          }
        }
      }
      const double violation = np.dot(x) - rhs[p];
      const double t_primal = z.isZero() ? kInf : -violation / z.dot(np);
      const double t = std::min(t_dual, t_primal);
      if (t == kInf) return infeasible();

      for (std::size_t l = 0; l < active.size(); ++l) mult[l] -= t * r[l];
      mult_p += t;
      if (t_primal != kInf) x += t * z;

      if (t_primal <= t_dual) {
        active.push_back(p);
        mult.push_back(mult_p);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      mult.erase(mult.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  sol.delta = x;
  sol.status = SolveStatus::kOptimal;
  sol.active_rows = active;
  sol.multipliers.resize(active.size());
  for (std::size_t l = 0; l < active.size(); ++l) {
    sol.multipliers[l] = std::max(0.0, mult[l]) / row_norm[active[l]];
  }
  return sol;
}

}  // namespace vrbf
