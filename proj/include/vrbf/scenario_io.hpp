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

// Scenario files are line-oriented `key = values` text. Scalar keys appear at
// most once; list keys repeat, one entry per line. Units are part of the key.
//
//   name = corridor
//   ticks = 1200                 seed = 7
//   dt_s = 0.05                  lambda_per_s = 2
//   v_max_mps = 1                epsilon_m = 0.1
//   p_coll = 1.5e-3              robot_radius_m = 0.25
//   apf_strength = 0.3           apf_range_m = 0.3
//   scale_floor = 1e-3
//   drop_probability = 0         delay_ticks = 0       max_stale_ticks = 5
//   robot_m = x y                            (one per robot, base point)
//   initial = phi_rad s_x s_y t_x_m t_y_m    (once, or once per robot)
//   circle_m = x y radius
//   segment_m = x0 y0 x1 y1
//   sigma_m2 = tick xx xy yy                 (shared covariance knot)
//   sigma_robot_m2 = robot tick xx xy yy
//   command = tick dphi ds_x ds_y dt_x dt_y  (rad/s, 1/s, 1/s, m/s, m/s)
//
// `#` starts a comment.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vrbf/sim.hpp"
#include "vrbf/text.hpp"

namespace vrbf {

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kScenarioParse,
              "line " + std::to_string(line) + ": " + msg);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  sc.commands.knots.clear();
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::parse_fail(line_no, "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto tokens = detail::split_ws(detail::trim(line.substr(eq + 1)));

    auto numbers = [&](std::size_t n) {
      if (tokens.size() != n) {
        detail::parse_fail(line_no, key + " expects " + std::to_string(n) +
                                        " value(s), got " +
                                        std::to_string(tokens.size()));
      }
      std::vector<double> v(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (!parse_number(tokens[k], v[k]) || !std::isfinite(v[k])) {
          detail::parse_fail(line_no, "bad number '" + std::string(tokens[k]) +
                                          "' for " + key);
        }
      }
      return v;
    };
    auto count = [&](std::string_view token) {
      std::uint64_t u = 0;
      if (!parse_unsigned(token, u)) {
        detail::parse_fail(line_no, "bad count '" + std::string(token) +
                                        "' for " + key);
      }
      return u;
    };
    auto scalar = [&]() {
      if (!seen.insert(key).second) detail::parse_fail(line_no, "duplicate key " + key);
      return numbers(1)[0];
    };
    auto scalar_count = [&]() {
      if (!seen.insert(key).second) detail::parse_fail(line_no, "duplicate key " + key);
      if (tokens.size() != 1) detail::parse_fail(line_no, key + " expects 1 value");
      return count(tokens[0]);
    };
    // Three unique entries xx xy yy starting at token `first`.
    auto covariance = [&](std::size_t first) {
      double v[3];
      for (std::size_t k = 0; k < 3; ++k) {
        if (!parse_number(tokens[first + k], v[k]) || !std::isfinite(v[k])) {
          detail::parse_fail(line_no, "bad covariance entry for " + key);
        }
      }
      Mat2 m;
      m << v[0], v[1], v[1], v[2];
      return m;
    };

    auto& cfg = sc.config;
    if (key == "name") {
      if (!seen.insert(key).second) detail::parse_fail(line_no, "duplicate key name");
      if (tokens.size() != 1) detail::parse_fail(line_no, "name must be one word");
      sc.name = std::string(tokens[0]);
    } else if (key == "ticks") {
      sc.duration_ticks = scalar_count();
    } else if (key == "seed") {
      sc.seed = scalar_count();
    } else if (key == "dt_s") {
      cfg.dt = scalar();
    } else if (key == "lambda_per_s") {
      cfg.lambda_stiffness = scalar();
    } else if (key == "v_max_mps") {
      cfg.v_max = scalar();
    } else if (key == "epsilon_m") {
      cfg.epsilon = scalar();
    } else if (key == "p_coll") {
      cfg.p_coll_bound = scalar();
    } else if (key == "apf_strength") {
      cfg.apf_strength = scalar();
    } else if (key == "apf_range_m") {
      cfg.apf_range = scalar();
    } else if (key == "robot_radius_m") {
      cfg.robot_radius = scalar();
    } else if (key == "scale_floor") {
      cfg.scale_floor = scalar();
    } else if (key == "drop_probability") {
      sc.bus.drop_probability = scalar();
    } else if (key == "delay_ticks") {
      sc.bus.delay_ticks = scalar_count();
    } else if (key == "max_stale_ticks") {
      sc.bus.max_stale_ticks = scalar_count();
    } else if (key == "robot_m") {
      const auto v = numbers(2);
      sc.base_points.emplace_back(v[0], v[1]);
    } else if (key == "initial") {
      const auto v = numbers(5);
      try {
        sc.initial_params.push_back(
            FormationParams(v[0], Vec2(v[1], v[2]), Vec2(v[3], v[4])));
      } catch (const Error& e) {
        detail::parse_fail(line_no, e.what());
      }
    } else if (key == "circle_m") {
      const auto v = numbers(3);
      sc.obstacles.circles.push_back({Vec2(v[0], v[1]), v[2]});
    } else if (key == "segment_m") {
      const auto v = numbers(4);
      sc.obstacles.segments.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
    } else if (key == "sigma_m2") {
      if (tokens.size() != 4) detail::parse_fail(line_no, "sigma_m2 expects 4 values");
      const auto t = count(tokens[0]);
      sc.sigma.shared.push_back({t, covariance(1)});
    } else if (key == "sigma_robot_m2") {
      if (tokens.size() != 5) detail::parse_fail(line_no, "sigma_robot_m2 expects 5 values");
      const auto robot = count(tokens[0]);
      const auto t = count(tokens[1]);
      sc.sigma.per_robot[robot].push_back({t, covariance(2)});
    } else if (key == "command") {
      if (tokens.size() != 6) detail::parse_fail(line_no, "command expects 6 values");
      const auto t = count(tokens[0]);
      if (!sc.commands.knots.empty() && t <= sc.commands.knots.back().tick) {
        detail::parse_fail(line_no, "command ticks must increase");
      }
      Vec5 d;
      for (int k = 0; k < 5; ++k) {
        if (!parse_number(tokens[k + 1], d(k)) || !std::isfinite(d(k))) {
          detail::parse_fail(line_no, "bad command component");
        }
      }
      sc.commands.knots.push_back({t, d});
    } else {
      detail::parse_fail(line_no, "unknown key '" + key + "'");
    }
  }

  if (sc.base_points.empty()) detail::parse_fail(line_no, "no robot_m entries");
  if (sc.initial_params.empty()) {
    sc.initial_params.push_back(FormationParams(0.0, Vec2(1, 1), Vec2(0, 0)));
  }
  for (const auto& [robot, knots] : sc.sigma.per_robot) {
    if (robot >= sc.base_points.size()) {
      detail::parse_fail(line_no, "sigma_robot_m2 names robot " +
                                      std::to_string(robot) + " of " +
                                      std::to_string(sc.base_points.size()));
    }
  }
  try {
    sc.validate();
    recenter_base(sc.base_points);
  } catch (const Error& e) {
    throw Error(ErrorCode::kScenarioParse, std::string("invalid scenario: ") + e.what());
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kScenarioParse, "cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::kScenarioParse, path + ": " + e.detail());
  }
}

inline std::string write_scenario(const Scenario& sc) {
  std::ostringstream o;
  const auto& c = sc.config;
  auto n = [](double x) { return format_number(x); };
  auto mat = [&](const Mat2& m) {
    return n(m(0, 0)) + " " + n(m(0, 1)) + " " + n(m(1, 1));
  };
  o << "name = " << sc.name << "\n";
  o << "ticks = " << sc.duration_ticks << "\n";
  o << "seed = " << sc.seed << "\n";
  o << "dt_s = " << n(c.dt) << "\n";
  o << "lambda_per_s = " << n(c.lambda_stiffness) << "\n";
  o << "v_max_mps = " << n(c.v_max) << "\n";
  o << "epsilon_m = " << n(c.epsilon) << "\n";
  o << "p_coll = " << n(c.p_coll_bound) << "\n";
  o << "apf_strength = " << n(c.apf_strength) << "\n";
  o << "apf_range_m = " << n(c.apf_range) << "\n";
  o << "robot_radius_m = " << n(c.robot_radius) << "\n";
  o << "scale_floor = " << n(c.scale_floor) << "\n";
  o << "drop_probability = " << n(sc.bus.drop_probability) << "\n";
  o << "delay_ticks = " << sc.bus.delay_ticks << "\n";
  o << "max_stale_ticks = " << sc.bus.max_stale_ticks << "\n";
  for (const auto& p : sc.base_points) {
    o << "robot_m = " << n(p.x()) << " " << n(p.y()) << "\n";
  }
  for (const auto& e : sc.initial_params) {
    o << "initial = " << n(e.phi()) << " " << n(e.scale().x()) << " "
      << n(e.scale().y()) << " " << n(e.translation().x()) << " "
      << n(e.translation().y()) << "\n";
  }
  for (const auto& ci : sc.obstacles.circles) {
    o << "circle_m = " << n(ci.center.x()) << " " << n(ci.center.y()) << " "
      << n(ci.radius) << "\n";
  }
  for (const auto& s : sc.obstacles.segments) {
    o << "segment_m = " << n(s.from.x()) << " " << n(s.from.y()) << " "
      << n(s.to.x()) << " " << n(s.to.y()) << "\n";
  }
  for (const auto& k : sc.sigma.shared) {
    o << "sigma_m2 = " << k.tick << " " << mat(k.covariance) << "\n";
  }
  for (const auto& [robot, knots] : sc.sigma.per_robot) {
    for (const auto& k : knots) {
      o << "sigma_robot_m2 = " << robot << " " << k.tick << " "
        << mat(k.covariance) << "\n";
    }
  }
  for (const auto& k : sc.commands.knots) {
    o << "command = " << k.tick;
    for (int i = 0; i < 5; ++i) o << " " << n(k.deta(i));
    o << "\n";
  }
  return o.str();
}

}  // namespace vrbf
