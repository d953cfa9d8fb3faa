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
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vrbf/chance.hpp"
#include "vrbf/obstacles.hpp"
#include "vrbf/planner.hpp"
#include "vrbf/types.hpp"
#include "vrbf/vrb.hpp"

namespace vrbf {

/// Independent generator for one (seed, tick, robot, stream) tuple, so that
/// per-robot work inside a tick can run in any order with identical results.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t tick,
                                  std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(
      splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ tick) ^ a) ^ b));
}

enum class RandomStream : std::uint64_t { kNoise = 1, kBus = 2 };

struct SigmaKnot {
  std::uint64_t tick = 0;
  Mat2 covariance = Mat2::Zero();
};

/// Piecewise-linear covariance schedule; constant before the first and after
/// the last knot. Robot-specific knots override the shared ones.
class SigmaSchedule {
 public:
  std::vector<SigmaKnot> shared;
  std::map<std::size_t, std::vector<SigmaKnot>> per_robot;

  Mat2 at(std::uint64_t tick, std::size_t robot) const {
    auto it = per_robot.find(robot);
    const auto& knots = it != per_robot.end() ? it->second : shared;
    if (knots.empty()) return Mat2::Zero();
    if (tick <= knots.front().tick) return knots.front().covariance;
    for (std::size_t k = 1; k < knots.size(); ++k) {
      if (tick <= knots[k].tick) {
        const auto& lo = knots[k - 1];
        const auto& hi = knots[k];
        const double w = static_cast<double>(tick - lo.tick) /
                         static_cast<double>(hi.tick - lo.tick);
        Mat2 m = (1.0 - w) * lo.covariance + w * hi.covariance;
        m(1, 0) = m(0, 1);
        return m;
      }
    }
    return knots.back().covariance;
  }

  void validate() const {
    auto check = [](const std::vector<SigmaKnot>& knots) {
      for (std::size_t k = 0; k < knots.size(); ++k) {
        if (k > 0 && knots[k].tick <= knots[k - 1].tick) {
          throw Error(ErrorCode::kConfigurationInvalid,
                      "covariance knots must have increasing ticks");
        }
        PositionBelief(Vec2::Zero(), knots[k].covariance);
      }
    };
    check(shared);
    for (const auto& [robot, knots] : per_robot) check(knots);
  }
};

struct CommandKnot {
  std::uint64_t tick = 0;
  Vec5 deta = Vec5::Zero();
};

/// Piecewise-constant operator command; zero before the first knot.
struct CommandScript {
  std::vector<CommandKnot> knots;

  Vec5 at(std::uint64_t tick) const {
    Vec5 out = Vec5::Zero();
    for (const auto& k : knots) {
      if (k.tick > tick) break;
      out = k.deta;
    }
    return out;
  }
};

struct BusPolicy {
  double drop_probability = 0.0;
  std::uint64_t delay_ticks = 0;
  std::uint64_t max_stale_ticks = 5;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<Vec2> base_points;
  /// One entry per robot, or a single entry shared by all robots.
  std::vector<FormationParams> initial_params;
  PlannerConfig config;
  ObstacleMap obstacles;
  SigmaSchedule sigma;
  CommandScript commands;
  std::uint64_t duration_ticks = 0;
  std::uint64_t seed = 7;
  BusPolicy bus;

  FormationParams initial_for(std::size_t robot) const {
    return initial_params.size() == 1 ? initial_params.front()
                                      : initial_params.at(robot);
  }

  void validate() const {
    config.validate();
    obstacles.validate();
    sigma.validate();
    if (base_points.empty()) {
      throw Error(ErrorCode::kConfigurationInvalid, "scenario has no robots");
    }
    if (initial_params.size() != 1 &&
        initial_params.size() != base_points.size()) {
      throw Error(ErrorCode::kConfigurationInvalid,
                  "need one shared initial parameter vector or one per robot");
    }
    if (!(bus.drop_probability >= 0.0 && bus.drop_probability < 1.0)) {
      throw Error(ErrorCode::kConfigurationInvalid,
                  "drop probability must lie in [0, 1)");
    }
    for (const auto& k : commands.knots) {
      if (!k.deta.allFinite()) {
        throw Error(ErrorCode::kConfigurationInvalid, "non-finite command");
      }
    }
  }
};

struct RobotTruth {
  Vec2 position = Vec2::Zero();
  double radius = 0.0;
  PositionBelief belief;
};

struct RobotRecord {
  Vec5 eta = Vec5::Zero();
  Vec2 reference = Vec2::Zero();
  Vec2 position = Vec2::Zero();
  Vec2 belief_mean = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();
  double radius = 0.0;
  double speed = 0.0;
  bool constraint_active = false;
  bool infeasible = false;
  bool safety_violation = false;
};

struct PairRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
  double bound = 0.0;
};

struct StepRecord {
  std::uint64_t tick = 0;
  double time = 0.0;
  std::vector<RobotRecord> robots;
  std::vector<PairRecord> pairs;
};

struct MetricsLog {
  std::vector<StepRecord> steps;

  /// Closest pair of a step; distance is infinite when there are no pairs.
  PairRecord closest_pair(std::size_t step) const {
    PairRecord best;
    best.distance = std::numeric_limits<double>::infinity();
    for (const auto& p : steps.at(step).pairs) {
      if (p.distance < best.distance) best = p;
    }
    return best;
  }

  /// Smallest distance / bound ratio over the run; 1 means at the bound.
  double worst_bound_ratio() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& st : steps) {
      for (const auto& p : st.pairs) worst = std::min(worst, p.distance / p.bound);
    }
    return worst;
  }

  double max_speed() const {
    double v = 0.0;
    for (const auto& st : steps) {
      for (const auto& r : st.robots) v = std::max(v, r.speed);
    }
    return v;
  }
};

/// Rebounds of the minimum pair distance: local maxima above the bound that
/// rise at least `prominence` (relative to the bound) over the preceding
/// local minimum. Counting starts at the first tick where the minimum
/// distance comes within `reach` (relative) of the bound and covers `window`
/// ticks. Returns 0 if the bound is never approached.
inline int count_rebounds(const MetricsLog& log, std::size_t window = 500,
                          double prominence = 0.01, double reach = 0.02) {
  const std::size_t n = log.steps.size();
  std::vector<double> d(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = log.closest_pair(k);
    d[k] = p.distance;
    b[k] = p.bound;
  }
  std::size_t start = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (d[k] <= (1.0 + reach) * b[k]) {
      start = k;
      break;
    }
  }
  if (start == n) return 0;
  const std::size_t stop = std::min(n, start + window);
  int count = 0;
  double valley = d[start];
  for (std::size_t k = start + 1; k + 1 < stop; ++k) {
    if (d[k] < d[k - 1] && d[k] <= d[k + 1]) valley = std::min(valley, d[k]);
    if (d[k] > d[k - 1] && d[k] >= d[k + 1] && d[k] > b[k] &&
        d[k] - valley >= prominence * b[k]) {
      ++count;
      valley = std::numeric_limits<double>::infinity();
    }
  }
  return count;
}

/// First-order tracking: move toward the reference at min(v_max, |d|/dt).
inline Vec2 track_reference(const Vec2& position, const Vec2& reference,
                            double v_max, double dt) {
  const Vec2 d = reference - position;
  const double dist = d.norm();
  const double max_step = v_max * dt;
  if (dist <= max_step) return reference;
  return position + (max_step / dist) * d;
}

/// Lockstep world: ground truth, per-robot planners and the parameter bus.
class World {
 public:
  explicit World(Scenario scenario)
      : scenario_(std::move(scenario)),
        base_(recenter_base(scenario_.base_points)),
        xi_(xi_from_pcoll(scenario_.config.p_coll_bound)) {
    scenario_.validate();
    const std::size_t n = base_.size();
    for (std::size_t i = 0; i < n; ++i) {
      PlannerState st;
      st.eta = scenario_.initial_for(i);
      st.base_point = base_[i];
      st.self_index = i;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) st.neighbors.push_back(j);
      }
      st.last_reference = transform_point(st.eta, base_[i]);
      planners_.push_back(std::move(st));

      RobotTruth truth;
      truth.position = planners_.back().last_reference;
      truth.radius = scenario_.config.robot_radius;
      truth.belief = PositionBelief(truth.position, scenario_.sigma.at(0, i));
      robots_.push_back(truth);
      caches_.emplace_back(scenario_.bus.max_stale_ticks);
    }
    // Everyone starts out knowing the initial parameters and beliefs.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) caches_[i].receive(j, planners_[j].eta, robots_[j].belief, 0);
      }
    }
  }

  const Scenario& scenario() const { return scenario_; }
  const BaseConfiguration& base() const { return base_; }
  const std::vector<RobotTruth>& robots() const { return robots_; }
  const std::vector<PlannerState>& planners() const { return planners_; }
  std::uint64_t tick() const { return tick_; }
  double xi() const { return xi_; }

  Vec2 centroid() const {
    Vec2 c = Vec2::Zero();
    for (const auto& r : robots_) c += r.position;
    return c / static_cast<double>(robots_.size());
  }

  /// Advances one tick with the given operator command.
  StepRecord step(const Vec5& operator_deta) {
    const std::size_t n = robots_.size();
    const auto& cfg = scenario_.config;
    const std::uint64_t k = tick_;
    if (!operator_deta.allFinite()) {
      throw Error(ErrorCode::kInvalidParams, "non-finite operator command");
    }

    for (std::size_t i = 0; i < n; ++i) {
      const Mat2 cov = scenario_.sigma.at(k, i);
      auto rng = stream_rng(scenario_.seed, k, i,
                            static_cast<std::uint64_t>(RandomStream::kNoise));
      std::normal_distribution<double> gauss;
      const Vec2 z(gauss(rng), gauss(rng));
      robots_[i].belief =
          PositionBelief(robots_[i].position + psd_sqrt(cov) * z, cov);
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        if (scenario_.bus.drop_probability > 0.0) {
          auto rng = stream_rng(scenario_.seed, k, i * n + j,
                                static_cast<std::uint64_t>(RandomStream::kBus));
          if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
              scenario_.bus.drop_probability) {
            continue;
          }
        }
        in_flight_.push_back({i, j, k + scenario_.bus.delay_ticks, k,
                              planners_[i].eta, robots_[i].belief});
      }
    }
    std::erase_if(in_flight_, [&](const Message& m) {
      if (m.deliver_tick > k) return false;
      caches_[m.to].receive(m.from, m.params, m.belief, m.sent_tick);
      return true;
    });

    StepRecord rec;
    rec.tick = k;
    rec.time = static_cast<double>(k + 1) * cfg.dt;
    rec.robots.resize(n);
    std::vector<PlannerState> next = planners_;
    for (std::size_t i = 0; i < n; ++i) {
      auto& rr = rec.robots[i];
      const auto snap = caches_[i].snapshot(k, planners_[i].neighbors);
      try {
        const auto out = planner_tick(planners_[i], snap, operator_deta,
                                      scenario_.obstacles, robots_[i].belief,
                                      base_, cfg);
        next[i] = out.state;
        rr.speed = out.speed;
        rr.constraint_active = out.pair_constraint_active;
        rr.infeasible =
            out.projection.status == SolveStatus::kInfeasibleFallback;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidParams ||
            e.code() == ErrorCode::kDomain) {
          // Inputs are finite, so these can only come from numerical blow-up.
          throw Error(ErrorCode::kSimulationDiverged,
                      "robot " + std::to_string(i) + " at tick " +
                          std::to_string(k) + ": " + e.what());
        }
        if (e.code() != ErrorCode::kInsideInflatedObstacle) throw;
        // Hold the previous parameters and reference for this robot.
        rr.safety_violation = true;
      }
    }
    planners_ = std::move(next);

    for (std::size_t i = 0; i < n; ++i) {
      auto& truth = robots_[i];
      truth.position = track_reference(truth.position,
                                       planners_[i].last_reference, cfg.v_max,
                                       cfg.dt);
      if (!truth.position.allFinite() ||
          !planners_[i].eta.to_vector().allFinite()) {
        throw Error(ErrorCode::kSimulationDiverged,
                    "non-finite state at tick " + std::to_string(k));
      }
      auto& rr = rec.robots[i];
      rr.eta = planners_[i].eta.to_vector();
      rr.reference = planners_[i].last_reference;
      rr.position = truth.position;
      rr.belief_mean = truth.belief.mean();
      rr.covariance = truth.belief.covariance();
      rr.radius = truth.radius;
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const Mat2 pair_cov =
            robots_[i].belief.covariance() + robots_[j].belief.covariance();
        rec.pairs.push_back(
            {i, j, (robots_[j].position - robots_[i].position).norm(),
             min_distance_bound(robots_[i].radius, robots_[j].radius,
                                cfg.epsilon, xi_, max_eigenvalue(pair_cov))});
      }
    }
    ++tick_;
    return rec;
  }

 private:
  struct Message {
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t deliver_tick = 0;
    std::uint64_t sent_tick = 0;
    FormationParams params;
    PositionBelief belief;
  };

  Scenario scenario_;
  BaseConfiguration base_;
  double xi_;
  std::vector<PlannerState> planners_;
  std::vector<RobotTruth> robots_;
  std::vector<NeighborCache> caches_;
  std::deque<Message> in_flight_;
  std::uint64_t tick_ = 0;
};

inline StepRecord step_world(World& world, const Vec5& operator_deta) {
  return world.step(operator_deta);
}

inline MetricsLog run_scenario(const Scenario& scenario) {
  World world(scenario);
  MetricsLog log;
  log.steps.reserve(scenario.duration_ticks);
  for (std::uint64_t k = 0; k < scenario.duration_ticks; ++k) {
    log.steps.push_back(world.step(scenario.commands.at(k)));
  }
  return log;
}

/// Layout used by corridor_scenario; exposed so callers can locate the walls.
struct CorridorGeometry {
  double entry_x = 5.0;
  double length = 8.0;
  double funnel = 2.0;  // 45 degree lead-in walls ahead of the entry
  double start_x = 0.0;
  double spacing = 2.0;
  double command_speed = 1.0;  // commanded translation rate, m/s
  double variance = 0.0;       // per-robot isotropic position variance, m^2

  double exit_x() const { return entry_x + length; }
};

/// Gains used for the reference corridor run: stiffer consensus than the
/// default and a short APF range so that wall pressure stays local.
inline PlannerConfig corridor_planner_config() {
  PlannerConfig cfg;
  cfg.lambda_stiffness = 2.0;
  cfg.apf_strength = 0.3;
  cfg.apf_range = 0.3;
  return cfg;
}

inline constexpr double kReferenceCorridorWidth = 1.9;

/// Robots on a near-square grid heading east into a straight corridor of the
/// given width, centred on y = 0, entered through a funnel.
inline Scenario corridor_scenario(double width, std::size_t n_robots,
                                  const PlannerConfig& cfg,
                                  const CorridorGeometry& geo = {}) {
  if (n_robots == 0) {
    throw Error(ErrorCode::kConfigurationInvalid, "corridor needs robots");
  }
  cfg.validate();
  const auto cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n_robots))));
  const std::size_t rows = (n_robots + cols - 1) / cols;

  const double xi = xi_from_pcoll(cfg.p_coll_bound);
  const double inflation =
      cfg.epsilon + cfg.robot_radius + xi * std::sqrt(geo.variance);
  const double pair_bound = min_distance_bound(
      cfg.robot_radius, cfg.robot_radius, cfg.epsilon, xi, 2.0 * geo.variance);
  const double needed =
      2.0 * inflation + static_cast<double>(rows - 1) * pair_bound;
  if (!(width > needed)) {
    throw Error(ErrorCode::kScenarioInfeasible,
                "corridor width " + std::to_string(width) + " m cannot fit " +
                    std::to_string(rows) + " robots abreast (needs > " +
                    std::to_string(needed) + " m)");
  }

  Scenario sc;
  sc.name = "corridor";
  sc.config = cfg;
  for (std::size_t k = 0; k < n_robots; ++k) {
    const double col = static_cast<double>(k % cols);
    const double row = static_cast<double>(k / cols);
    sc.base_points.emplace_back(col * geo.spacing, row * geo.spacing);
  }
  sc.initial_params = {FormationParams(0.0, Vec2(1.0, 1.0), Vec2(geo.start_x, 0.0))};
  const double half = 0.5 * width;
  sc.obstacles.segments.push_back({Vec2(geo.entry_x, half), Vec2(geo.exit_x(), half)});
  sc.obstacles.segments.push_back({Vec2(geo.entry_x, -half), Vec2(geo.exit_x(), -half)});
  if (geo.funnel > 0.0) {
    const double f = geo.funnel;
    sc.obstacles.segments.push_back(
        {Vec2(geo.entry_x - f, half + f), Vec2(geo.entry_x, half)});
    sc.obstacles.segments.push_back(
        {Vec2(geo.entry_x - f, -half - f), Vec2(geo.entry_x, -half)});
  }
  if (geo.variance > 0.0) {
    sc.sigma.shared.push_back({0, geo.variance * Mat2::Identity()});
  }
  Vec5 cmd = Vec5::Zero();
  cmd(3) = geo.command_speed;
  sc.commands.knots.push_back({0, cmd});
  sc.duration_ticks = 1200;
  return sc;
}

/// Qualitative checks of a corridor rollout.
struct CorridorReport {
  double initial_distance = 0.0;
  double min_distance = 0.0;
  double worst_ratio = 0.0;  // min distance / bound over every pair and tick
  int rebounds = 0;
  std::optional<std::uint64_t> first_activation;
  double final_centroid_x = 0.0;
  double max_speed = 0.0;
  bool hard_collision = false;

  bool shrinks() const { return min_distance < initial_distance; }
  bool within_bound(double tolerance = 0.02) const {
    return worst_ratio >= 1.0 - tolerance;
  }
  bool passed_exit(const CorridorGeometry& geo) const {
    return final_centroid_x > geo.exit_x();
  }
  bool speed_capped(double v_max) const { return max_speed <= v_max + 1e-9; }
};

inline CorridorReport evaluate_corridor(const MetricsLog& log,
                                        double robot_radius) {
  CorridorReport rep;
  if (log.steps.empty()) return rep;
  rep.initial_distance = log.closest_pair(0).distance;
  rep.min_distance = rep.initial_distance;
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& st = log.steps[k];
    rep.min_distance = std::min(rep.min_distance, log.closest_pair(k).distance);
    for (const auto& r : st.robots) {
      if (r.constraint_active && !rep.first_activation) {
        rep.first_activation = st.tick;
      }
    }
    for (const auto& p : st.pairs) {
      rep.hard_collision |= p.distance < 2.0 * robot_radius;
    }
  }
  rep.worst_ratio = log.worst_bound_ratio();
  rep.rebounds = count_rebounds(log);
  rep.max_speed = log.max_speed();
  Vec2 c = Vec2::Zero();
  for (const auto& r : log.steps.back().robots) c += r.position;
  rep.final_centroid_x = c.x() / static_cast<double>(log.steps.back().robots.size());
  return rep;
}

}  // namespace vrbf
