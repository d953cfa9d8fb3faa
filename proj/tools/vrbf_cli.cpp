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

// Headless entry point: run scenarios, the corridor study and the
// verification suites, or serve a live teleoperation session.
//
// Exit codes: 0 success, 1 bad input (usage, scenario, file), 2 simulation
// diverged, 3 verification failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>

#include "vrbf/metrics_io.hpp"
#include "vrbf/scenario_io.hpp"
#include "vrbf/sim.hpp"
#include "vrbf/teleop.hpp"
#include "vrbf/text.hpp"
#include "vrbf/verify.hpp"

namespace {

using vrbf::format_number;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitVerification = 3;

struct Endpoint {
  std::string host;
  unsigned short port = 0;
};

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  std::uint64_t port = 0;
  if (colon == std::string::npos || colon == 0 ||
      !vrbf::parse_unsigned(std::string_view(text).substr(colon + 1), port) ||
      port > 65535) {
    throw vrbf::Error(vrbf::ErrorCode::kConfigurationInvalid,
                      "--serve expects host:port, got '" + text + "'");
  }
  return {text.substr(0, colon), static_cast<unsigned short>(port)};
}

std::size_t sample_count(double samples) {
  if (!(samples >= 1e4) || samples > 1e10 || samples != std::floor(samples)) {
    throw vrbf::Error(vrbf::ErrorCode::kConfigurationInvalid,
                      "--samples must be a whole number in [1e4, 1e10]");
  }
  return static_cast<std::size_t>(samples);
}

void print_summary(const vrbf::MetricsLog& log, const vrbf::Scenario& sc) {
  const auto rep = vrbf::evaluate_corridor(log, sc.config.robot_radius);
  std::uint64_t active_ticks = 0;
  for (const auto& st : log.steps) {
    for (const auto& r : st.robots) {
      if (r.constraint_active) {
        ++active_ticks;
        break;
      }
    }
  }
  std::cout << "scenario: " << sc.name << "\n"
            << "robots: " << sc.base_points.size() << "\n"
            << "ticks: " << log.steps.size() << "\n"
            << "seed: " << sc.seed << "\n";
  if (!log.steps.empty() && !log.steps.front().pairs.empty()) {
    double bound_at_min = 0.0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < log.steps.size(); ++k) {
      const auto p = log.closest_pair(k);
      if (p.distance < dmin) {
        dmin = p.distance;
        bound_at_min = p.bound;
      }
    }
    std::cout << "min pair distance m: " << format_number(dmin) << "\n"
              << "bound at min m: " << format_number(bound_at_min) << "\n"
              << "worst distance/bound: " << format_number(rep.worst_ratio) << "\n";
  }
  std::cout << "first constraint activation tick: "
            << (rep.first_activation ? std::to_string(*rep.first_activation)
                                     : std::string("none"))
            << "\n"
            << "ticks with an active constraint: " << active_ticks << "\n"
            << "max speed m/s: " << format_number(rep.max_speed) << "\n";
}

void write_outputs(const std::string& out, const vrbf::MetricsLog& log,
                   const vrbf::Scenario& sc) {
  vrbf::write_metrics(out, log, sc);
  std::cout << "data: " << out << "\n";
}

int serve(vrbf::Scenario sc, const std::string& endpoint) {
  const Endpoint ep = parse_endpoint(endpoint);
  vrbf::TeleopService svc(std::move(sc));
  svc.start(ep.host, ep.port);
  std::cout << "serving ws://" << ep.host << ":" << svc.port()
            << "/ws (health at /health); Ctrl-C to stop" << std::endl;
  boost::asio::io_context signals_ctx;
  boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](const boost::system::error_code&, int) {});
  signals_ctx.run();
  svc.stop();
  if (svc.diverged()) {
    std::cerr << "error: simulation diverged during the live session\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int report_check(const char* label, bool ok) {
  std::cout << (ok ? "ok   " : "FAIL ") << label << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed VRB formation planner"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::string out = "vrbf_out";
  std::string serve_at;

  auto* run = app.add_subcommand("run", "Run a scenario file and write metrics");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--ticks", ticks, "Override the run length in ticks");
  run->add_option("--out", out, "Output directory for CSV and JSONL data");
  run->add_option("--serve", serve_at,
                  "Serve the scenario live over a websocket at host:port");

  double width = vrbf::kReferenceCorridorWidth;
  std::size_t robots = 4;
  double variance = 0.0;
  std::string write_scenario_to;
  auto* corridor = app.add_subcommand("corridor", "Narrow-corridor study");
  corridor->add_option("--width", width, "Corridor width in m");
  corridor->add_option("--robots", robots, "Robot count");
  corridor->add_option("--variance", variance, "Per-robot position variance in m^2");
  corridor->add_option("--seed", seed, "Scenario seed");
  corridor->add_option("--ticks", ticks, "Run length in ticks");
  corridor->add_option("--out", out, "Output directory for CSV and JSONL data");
  corridor->add_option("--write-scenario", write_scenario_to,
                       "Also save the generated scenario file");
  corridor->add_option("--serve", serve_at,
                       "Serve the corridor live over a websocket at host:port");

  double pcoll = 1.5e-3;
  double samples = 1e5;
  std::size_t instances = 200;
  std::uint64_t verify_seed = 2026;
  auto* vbound = app.add_subcommand("verify-bound",
                                    "Monte Carlo check of the collision bound");
  vbound->add_option("--pcoll", pcoll, "Collision probability bound");
  vbound->add_option("--samples", samples, "Samples per instance (e.g. 1e6)");
  vbound->add_option("--instances", instances, "Random pair instances");
  vbound->add_option("--seed", verify_seed, "Generator seed");

  std::size_t problems = 1000;
  auto* vqp = app.add_subcommand("verify-qp",
                                 "Active-set QP against exhaustive enumeration");
  vqp->add_option("--problems", problems, "Random problems");
  vqp->add_option("--seed", verify_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*run || *corridor) {
      vrbf::Scenario sc;
      if (*run) {
        sc = vrbf::load_scenario(scenario_path);
      } else {
        vrbf::CorridorGeometry geo;
        geo.variance = variance;
        sc = vrbf::corridor_scenario(width, robots,
                                     vrbf::corridor_planner_config(), geo);
      }
      if (seed) sc.seed = *seed;
      if (ticks) sc.duration_ticks = *ticks;
      if (!write_scenario_to.empty()) {
        std::ofstream f(write_scenario_to, std::ios::binary);
        f << vrbf::write_scenario(sc);
        if (!f) {
          throw vrbf::Error(vrbf::ErrorCode::kIo,
                            "cannot write " + write_scenario_to);
        }
      }
      if (!serve_at.empty()) return serve(std::move(sc), serve_at);

      const auto start = std::chrono::steady_clock::now();
      const auto log = vrbf::run_scenario(sc);
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start).count();
      print_summary(log, sc);
      std::cout << "wall time s: " << format_number(std::round(secs * 1e3) / 1e3)
                << "\n";
      write_outputs(out, log, sc);
      if (*run) return kExitOk;

      const auto rep = vrbf::evaluate_corridor(log, sc.config.robot_radius);
      const vrbf::CorridorGeometry geo;
      int failed = 0;
      failed += report_check("distance shrinks on approach", rep.shrinks());
      failed += report_check("never below bound - 2%", rep.within_bound());
      failed += report_check("centroid passes the exit", rep.passed_exit(geo));
      failed += report_check("rebound detected (>= 2 maxima in 500 ticks)",
                             rep.rebounds >= 2);
      failed += report_check("velocity cap", rep.speed_capped(sc.config.v_max));
      failed += report_check("no hard collision", !rep.hard_collision);
      std::cout << "rebounds: " << rep.rebounds << "\n";
      return failed ? kExitVerification : kExitOk;
    }

    if (*vbound) {
      vrbf::verify::BoundSuiteOptions opt;
      opt.p_coll = pcoll;
      opt.samples = sample_count(samples);
      opt.instances = instances;
      opt.seed = verify_seed;
      const auto rep = vrbf::verify::run_bound_suite(opt);
      std::cout << "p_coll: " << format_number(rep.p_coll) << "\n"
                << "xi: " << format_number(rep.xi) << "\n"
                << "samples per instance: " << opt.samples << "\n"
                << "instances: " << rep.instances << ", halfspace bound violated: "
                << rep.hyperplane_failures << "\n"
                << "worst margin (halfspace - (mc - 3 se)): "
                << format_number(rep.worst_margin) << "\n";
      for (const auto& c : rep.calibration) {
        std::cout << "at bound, variance " << format_number(c.variance)
                  << " m^2: p = " << format_number(c.estimate.probability)
                  << " (se " << format_number(c.estimate.standard_error) << ") "
                  << (c.passed ? "ok" : "FAIL") << "\n";
      }
      std::cout << "max observed probability at bound: "
                << format_number(rep.max_calibrated_probability()) << " vs "
                << format_number(rep.p_coll) << "\n"
                << (rep.passed() ? "PASS" : "FAIL") << "\n";
      return rep.passed() ? kExitOk : kExitVerification;
    }

    if (*vqp) {
      const auto rep = vrbf::verify::run_qp_suite({.problems = problems,
                                                   .seed = verify_seed});
      std::cout << "problems: " << rep.problems << "\n"
                << "max objective gap: " << format_number(rep.max_objective_gap)
                << "\n"
                << "worst slack: " << format_number(rep.worst_slack) << "\n"
                << "mismatches: " << rep.failures << "\n"
                << (rep.passed() ? "PASS" : "FAIL") << "\n";
      return rep.passed() ? kExitOk : kExitVerification;
    }
  } catch (const vrbf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == vrbf::ErrorCode::kSimulationDiverged ? kExitDiverged
                                                            : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
