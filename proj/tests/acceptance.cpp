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

// Acceptance runner: one PASS/FAIL line per criterion with the measured
// value and the pinned tolerance. With no arguments every criterion runs;
// otherwise only the named ones. Exit status is 0 only if all selected pass.

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "vrbf/metrics_io.hpp"
#include "vrbf/sim.hpp"
#include "vrbf/text.hpp"
#include "vrbf/verify.hpp"

namespace {

using namespace vrbf;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome transform_fidelity() {
  // Unit grid under rotation pi/4, scale (1, 2), translation (3, 1).
  const FormationParams eta(std::numbers::pi / 4.0, Vec2(1.0, 2.0), Vec2(3.0, 1.0));
  const double expected[9][2] = {
      {3.7071, -1.1213}, {2.2929, 0.2929}, {0.8787, 1.7071},
      {4.4142, -0.4142}, {3.0, 1.0},       {1.5858, 2.4142},
      {5.1213, 0.2929},  {3.7071, 1.7071}, {2.2929, 3.1213}};
  double worst = 0.0;
  int k = 0;
  for (int x = -1; x <= 1; ++x) {
    for (int y = -1; y <= 1; ++y, ++k) {
      const Vec2 p = transform_point(eta, Vec2(x, y));
      worst = std::max({worst, std::abs(p.x() - expected[k][0]),
                        std::abs(p.y() - expected[k][1])});
    }
  }
  return {worst <= 5e-5, "9 points, max |err| " + num(worst) + " (tol 5e-5)"};
}

Outcome jacobian_correctness() {
  testing::Gen gen(101);
  double fd = 0.0;
  double ident = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const FormationParams eta = gen.params(5.0);
    const Vec2 c = gen.vec2(-3.0, 3.0);
    const Mat25 j = jacobian(eta, c);
    fd = std::max(fd, testing::max_relative_error(
                          testing::finite_difference_jacobian(eta, c), j));
    ident = std::max(ident, (j * pseudo_inverse(j) - Mat2::Identity())
                                .cwiseAbs()
                                .maxCoeff());
  }
  return {fd < 1e-5 && ident < 1e-9, "1000 samples, max rel err " + num(fd) +
                                         " (tol 1e-5), |J J+ - I| " +
                                         num(ident) + " (tol 1e-9)"};
}

Outcome xi_calibration() {
  const double xi = xi_from_pcoll(1.5e-3);
  return {std::abs(xi - 3.0) <= 0.01,
          "xi(1.5e-3) = " + num(xi) + ", target 3.0 +/- 0.01"};
}

Outcome quantile_accuracy() {
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    // Probes spread log-uniformly into both tails and linearly in the body.
    const double p = k < 50 ? std::pow(10.0, -12.0 + 11.0 * k / 49.0)
                            : (k - 49) / 51.0;
    const double oracle = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    worst = std::max(worst, std::abs(normal::quantile(p) - oracle));
  }
  return {worst < 1e-6, "100 probes, max |err| " + num(worst) + " (tol 1e-6)"};
}

Outcome bound_chain() {
  const auto t0 = Clock::now();
  const auto rep = verify::run_bound_suite({.samples = 100000, .instances = 200});
  const double secs = seconds_since(t0);
  return {rep.passed() && secs < 120.0,
          "200 instances, " + std::to_string(rep.hyperplane_failures) +
              " halfspace violations; max p at bound " +
              num(rep.max_calibrated_probability()) +
              " vs 1.5e-3 + 3 se; " + num(secs) + " s (limit 120 s)"};
}

Outcome qp_oracle() {
  const auto rep = verify::run_qp_suite({.problems = 1000});
  return {rep.passed(), "1000 problems, max objective gap " +
                            num(rep.max_objective_gap) + " (tol 1e-8), worst slack " +
                            num(rep.worst_slack) + " (tol -1e-9)"};
}

double disagreement(const StepRecord& st) {
  double d = 0.0;
  for (const auto& a : st.robots) {
    for (const auto& b : st.robots) {
      d = std::max(d, (a.eta - b.eta).cwiseAbs().maxCoeff());
    }
  }
  return d;
}

Outcome consensus_convergence() {
  Scenario sc;
  sc.name = "consensus";
  for (int k = 0; k < 6; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 6.0;
    sc.base_points.emplace_back(5.0 * std::cos(a), 5.0 * std::sin(a));
  }
  testing::Gen gen(606);
  for (int k = 0; k < 6; ++k) {
    Vec5 v;
    v << 0.0, 1.0, 1.0, 0.0, 0.0;
    for (int m = 0; m < 5; ++m) v(m) += gen.uniform(-0.5, 0.5);
    sc.initial_params.push_back(FormationParams::from_vector(v));
  }
  sc.config.lambda_stiffness = 1.0;
  sc.config.dt = 0.05;
  sc.config.v_max = 100.0;  // keep the cap out of the consensus dynamics
  sc.duration_ticks = 500;
  World world(sc);
  double prev = 0.0;
  for (const auto& r : world.planners()) {
    for (const auto& q : world.planners()) {
      prev = std::max(prev, (r.eta.to_vector() - q.eta.to_vector()).cwiseAbs().maxCoeff());
    }
  }
  const double initial = prev;
  bool monotone = true;
  long reached = -1;
  for (std::uint64_t k = 0; k < 500; ++k) {
    const double d = disagreement(world.step(Vec5::Zero()));
    monotone &= d <= prev + 1e-15;
    if (reached < 0 && d < 1e-6) reached = static_cast<long>(k);
    prev = d;
  }
  return {monotone && reached >= 0,
          "initial spread " + num(initial) + ", below 1e-6 at tick " +
              std::to_string(reached) + " (limit 500), " +
              (monotone ? "monotone" : "NOT monotone")};
}

Scenario reference_corridor() {
  return corridor_scenario(kReferenceCorridorWidth, 4, corridor_planner_config());
}

Outcome velocity_cap() {
  const auto sc = reference_corridor();
  const auto log = run_scenario(sc);
  const double v = log.max_speed();
  return {v <= sc.config.v_max + 1e-9,
          "max |J deta| " + num(v) + " vs v_max " + num(sc.config.v_max) + " + 1e-9"};
}

Outcome corridor_behaviour() {
  const auto t0 = Clock::now();
  const auto sc = reference_corridor();
  const auto log = run_scenario(sc);
  const double secs = seconds_since(t0);
  const auto rep = evaluate_corridor(log, sc.config.robot_radius);
  const bool ok = rep.shrinks() && rep.within_bound(0.02) &&
                  rep.passed_exit(CorridorGeometry{}) && rep.rebounds >= 2 &&
                  secs < 60.0;
  return {ok, "width " + num(kReferenceCorridorWidth) + " m: distance " +
                  num(rep.initial_distance) + " -> " + num(rep.min_distance) +
                  " m, worst distance/bound " + num(rep.worst_ratio) +
                  " (min 0.98), centroid x " + num(rep.final_centroid_x) +
                  " (exit " + num(CorridorGeometry{}.exit_x()) + "), rebounds " +
                  std::to_string(rep.rebounds) + " (min 2), " + num(secs) +
                  " s (limit 60 s)"};
}

std::string csv_bytes(const MetricsLog& log, const Scenario& sc) {
  std::ostringstream o;
  write_ticks_csv(o, log);
  write_states_csv(o, log);
  write_pairs_csv(o, log);
  write_jsonl(o, log, sc.obstacles);
  return o.str();
}

Outcome determinism() {
  std::vector<Scenario> cases;
  cases.push_back(reference_corridor());
  CorridorGeometry noisy;
  noisy.variance = 0.002;
  auto sc = corridor_scenario(kReferenceCorridorWidth, 4, corridor_planner_config(), noisy);
  sc.bus.drop_probability = 0.2;
  sc.bus.delay_ticks = 1;
  sc.seed = 11;
  cases.push_back(sc);
  std::size_t bytes = 0;
  for (const auto& c : cases) {
    const auto a = csv_bytes(run_scenario(c), c);
    const auto b = csv_bytes(run_scenario(c), c);
    if (a != b) return {false, "scenario '" + c.name + "' differs between runs"};
    bytes += a.size();
  }
  return {true, "noiseless and noisy/lossy corridor, " + std::to_string(bytes) +
                    " bytes identical across reruns"};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

constexpr Criterion kCriteria[] = {
    {"transform_fidelity", transform_fidelity},
    {"jacobian_correctness", jacobian_correctness},
    {"xi_calibration", xi_calibration},
    {"quantile_accuracy", quantile_accuracy},
    {"bound_chain", bound_chain},
    {"qp_oracle_equivalence", qp_oracle},
    {"consensus_convergence", consensus_convergence},
    {"velocity_cap", velocity_cap},
    {"corridor_behaviour", corridor_behaviour},
    {"determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.size() == 1 && wanted[0] == "--list") {
    for (const auto& c : kCriteria) std::cout << c.name << "\n";
    return 0;
  }
  int failures = 0;
  std::size_t ran = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) {
      continue;
    }
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.passed;
    std::cout << (o.passed ? "PASS " : "FAIL ") << c.name << ": " << o.detail
              << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
