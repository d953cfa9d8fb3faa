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
#include <algorithm>
#include <map>
#include <span>
#include <set>
#include <vector>

#include "vrbf/chance.hpp"
#include "vrbf/obstacles.hpp"
#include "vrbf/qp.hpp"
#include "vrbf/types.hpp"
#include "vrbf/vrb.hpp"

namespace vrbf {

struct PlannerConfig {
  double lambda_stiffness = 1.0;  // 1/s
  double v_max = 1.0;             // m/s
  double dt = 0.05;               // s
  double epsilon = 0.1;           // m
  double p_coll_bound = 1.5e-3;
  double apf_strength = 0.5;      // m^3/s
  double apf_range = 2.0;         // m
  double robot_radius = 0.25;     // m
  double scale_floor = kDefaultScaleFloor;

  void validate() const {
    auto fail = [](const char* what) {
      throw Error(ErrorCode::kConfigurationInvalid, what);
    };
    if (!(lambda_stiffness > 0.0)) fail("lambda_stiffness must be > 0");
    if (!(v_max > 0.0)) fail("v_max must be > 0");
    if (!(dt > 0.0 && dt <= 1.0)) fail("dt must lie in (0, 1]");
    if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
    if (!(p_coll_bound > 0.0 && p_coll_bound <= 0.5)) {
      fail("p_coll_bound must lie in (0, 0.5]");
    }
    if (!(apf_strength >= 0.0)) fail("apf_strength must be >= 0");
    if (!(apf_range > 0.0)) fail("apf_range must be > 0");
    if (!(robot_radius >= 0.0)) fail("robot_radius must be >= 0");
    if (!(scale_floor > 0.0)) fail("scale_floor must be > 0");
  }
};

struct PlannerState {
  FormationParams eta;
  Vec2 base_point = Vec2::Zero();
  std::size_t self_index = 0;
  Vec2 last_reference = Vec2::Zero();
  /// Robots this planner runs consensus with.
  std::vector<std::size_t> neighbors;
};

/// What one robot knows about the others at a given tick. Neighbors in
/// `dropped` were declared stale by the harness and are left out of the
/// consensus sum; every other configured neighbor must have an entry.
struct NeighborSnapshot {
  std::map<std::size_t, FormationParams> params;
  std::map<std::size_t, PositionBelief> beliefs;
  std::set<std::size_t> dropped;
  std::uint64_t stamp = 0;
};

/// Receiver-side buffer applying the stale-neighbor policy: a neighbor's
/// last message is reused for up to `max_age` ticks, after which it is
/// dropped from consensus. Its last belief is still handed out so that the
/// pair constraint keeps using the most recent covariance.
class NeighborCache {
 public:
  explicit NeighborCache(std::uint64_t max_age = 5) : max_age_(max_age) {}

  void receive(std::size_t from, const FormationParams& params,
               const PositionBelief& belief, std::uint64_t sent_tick) {
    auto& e = entries_[from];
    if (e.valid && sent_tick < e.tick) return;
    e = {params, belief, sent_tick, true};
  }

  NeighborSnapshot snapshot(std::uint64_t now,
                            std::span<const std::size_t> topology) const {
    NeighborSnapshot snap;
    snap.stamp = now;
    for (std::size_t j : topology) {
      auto it = entries_.find(j);
      if (it == entries_.end()) {
        snap.dropped.insert(j);
        continue;
      }
      snap.beliefs.emplace(j, it->second.belief);
      if (now - it->second.tick <= max_age_) {
        snap.params.emplace(j, it->second.params);
      } else {
        snap.dropped.insert(j);
      }
    }
    return snap;
  }

 private:
  struct Entry {
    FormationParams params;
    PositionBelief belief;
    std::uint64_t tick = 0;
    bool valid = false;
  };
  std::uint64_t max_age_;
  std::map<std::size_t, Entry> entries_;
};

inline Vec5 tracking_derivative(const PlannerState& state, const Vec2& v_des) {
  return pseudo_inverse(jacobian(state.eta, state.base_point)) * v_des;
}

inline Vec5 consensus_term(const PlannerState& state,
                           const NeighborSnapshot& snapshot, double lambda) {
  const Vec5 own = state.eta.to_vector();
  Vec5 sum = Vec5::Zero();
  for (std::size_t j : state.neighbors) {
    if (j == state.self_index) continue;
    auto it = snapshot.params.find(j);
    if (it == snapshot.params.end()) {
      if (snapshot.dropped.contains(j)) continue;
      throw Error(ErrorCode::kStaleSnapshot,
                  "no parameters from neighbor " + std::to_string(j));
    }
    sum += own - it->second.to_vector();
  }
  return -lambda * sum;
}

/// Repulsive potential-field velocity at the desired position p_des. The
/// clearance is inflated by xi times the largest standard deviation of the
/// robot's own position estimate.
inline Vec2 apf_repulsion(const Vec2& p_des, const ObstacleMap& obstacles,
                          const PlannerConfig& cfg, double xi,
                          const Mat2& sigma_self) {
  const auto nearest = obstacles.nearest(p_des);
  if (!nearest) return Vec2::Zero();
  const double inflation = cfg.epsilon + cfg.robot_radius +
                           xi * std::sqrt(std::max(0.0, max_eigenvalue(sigma_self)));
  const double rho = nearest->distance - inflation;
  if (!(rho > 0.0)) {
    throw Error(ErrorCode::kInsideInflatedObstacle,
                "desired position lies inside an inflated obstacle");
  }
  if (rho >= cfg.apf_range) return Vec2::Zero();
  const Vec2 away = p_des - nearest->point;
  const double away_norm = away.norm();
  const Vec2 grad = away_norm > 0.0 ? Vec2(away / away_norm) : Vec2::Zero();
  return cfg.apf_strength * (1.0 / rho - 1.0 / cfg.apf_range) / (rho * rho) *
         grad;
}

inline Vec2 compose_desired_velocity(const PlannerState& state,
                                     const Vec5& operator_deta,
                                     const Vec2& v_rep) {
  return jacobian(state.eta, state.base_point) * operator_deta + v_rep;
}

inline Vec5 velocity_cap(const Mat25& j, const Vec5& deta, double v_max) {
  const double speed = (j * deta).norm();
  if (speed >= v_max && speed > 0.0) return (v_max / speed) * deta;
  return deta;
}

struct TickResult {
  PlannerState state;
  Vec2 reference = Vec2::Zero();
  /// Parameter derivative after projection and velocity cap.
  Vec5 deta = Vec5::Zero();
  /// |J deta| of the applied derivative, m/s.
  double speed = 0.0;
  ScaleConstraintSet constraints;
  ActiveSetSolution projection;
  /// Pair rows (not the scale-floor rows) active in the projection.
  bool pair_constraint_active = false;
};

/// One planning step for one robot: compose the desired velocity, track it,
/// add consensus, project the scale derivative onto the linearized pair
/// constraints, cap the velocity, integrate with explicit Euler and emit the
/// position reference.
inline TickResult planner_tick(const PlannerState& state,
                               const NeighborSnapshot& snapshot,
                               const Vec5& operator_deta,
                               const ObstacleMap& obstacles,
                               const PositionBelief& own_belief,
                               const BaseConfiguration& base,
                               const PlannerConfig& cfg) {
  cfg.validate();
  const std::size_t n = base.size();
  if (state.self_index >= n) {
    throw Error(ErrorCode::kConfigurationInvalid, "self index out of range");
  }
  const double xi = xi_from_pcoll(cfg.p_coll_bound);
  const Mat25 j = jacobian(state.eta, state.base_point);

  const Vec2 p_des = transform_point(state.eta, state.base_point);
  const Vec2 v_rep =
      apf_repulsion(p_des, obstacles, cfg, xi, own_belief.covariance());
  const Vec2 v_des = compose_desired_velocity(state, operator_deta, v_rep);
  Vec5 deta = pseudo_inverse(j) * v_des +
              consensus_term(state, snapshot, cfg.lambda_stiffness);

  std::vector<PositionBelief> beliefs(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == state.self_index) {
      beliefs[k] = own_belief;
      continue;
    }
    auto it = snapshot.beliefs.find(k);
    if (it == snapshot.beliefs.end()) {
      throw Error(ErrorCode::kStaleSnapshot,
                  "no position belief for robot " + std::to_string(k));
    }
    beliefs[k] = it->second;
  }
  const std::vector<double> radii(n, cfg.robot_radius);
  const Vec2 s = state.eta.scale();

  TickResult out;
  out.constraints = assemble_constraints(s, beliefs, base, radii, cfg.epsilon,
                                         xi, state.self_index);

  ProjectionProblem problem;
  problem.target = deta.segment<2>(1);
  problem.current_scale = s;
  problem.rows = out.constraints.rows;
  // Keep the scale strictly above the floor; these rows trail the pair rows.
  const std::size_t pair_rows = problem.rows.size();
  const double floor = 2.0 * cfg.scale_floor;
  problem.rows.push_back({Vec2(1.0, 0.0), floor, state.self_index, false});
  problem.rows.push_back({Vec2(0.0, 1.0), floor, state.self_index, false});

  out.projection = project_scale_derivative(problem);
  deta.segment<2>(1) = out.projection.delta;
  for (std::size_t k : out.projection.active_rows) {
    if (k < pair_rows) out.pair_constraint_active = true;
  }

  deta = velocity_cap(j, deta, cfg.v_max);
  out.deta = deta;
  out.speed = (j * deta).norm();

  out.state = state;
  out.state.eta = FormationParams::from_vector(
      state.eta.to_vector() + cfg.dt * deta, cfg.scale_floor);
  out.reference = transform_point(out.state.eta, state.base_point);
  out.state.last_reference = out.reference;
  return out;
}

}  // namespace vrbf
