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

// Metrics export. Column order is frozen; new columns are only appended.
//
// ticks.csv   tick,time_s,min_distance_m,bound_m,ratio,active_robots,
//             max_speed_mps,centroid_x_m,centroid_y_m
// states.csv  tick,time_s,robot,phi_rad,s_x,s_y,t_x_m,t_y_m,ref_x_m,ref_y_m,
//             pos_x_m,pos_y_m,belief_x_m,belief_y_m,cov_xx_m2,cov_xy_m2,
//             cov_yy_m2,radius_m,speed_mps,constraint_active,infeasible,
//             safety_violation
// pairs.csv   tick,time_s,i,j,distance_m,bound_m
// stream.jsonl  one state message per tick; the first carries the obstacles.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "vrbf/sim.hpp"
#include "vrbf/text.hpp"
#include "vrbf/wire.hpp"

namespace vrbf {

inline void write_ticks_csv(std::ostream& o, const MetricsLog& log) {
  o << "tick,time_s,min_distance_m,bound_m,ratio,active_robots,max_speed_mps,"
       "centroid_x_m,centroid_y_m\n";
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& st = log.steps[k];
    Vec2 c = Vec2::Zero();
    int active = 0;
    double vmax = 0.0;
    for (const auto& r : st.robots) {
      c += r.position;
      active += r.constraint_active;
      vmax = std::max(vmax, r.speed);
    }
    if (!st.robots.empty()) c /= static_cast<double>(st.robots.size());
    o << st.tick << ',' << format_number(st.time) << ',';
    if (st.pairs.empty()) {
      o << ",,";
    } else {
      const auto p = log.closest_pair(k);
      o << format_number(p.distance) << ',' << format_number(p.bound) << ','
        << format_number(p.distance / p.bound);
    }
    o << ',' << active << ',' << format_number(vmax) << ','
      << format_number(c.x()) << ',' << format_number(c.y()) << '\n';
  }
}

inline void write_states_csv(std::ostream& o, const MetricsLog& log) {
  o << "tick,time_s,robot,phi_rad,s_x,s_y,t_x_m,t_y_m,ref_x_m,ref_y_m,pos_x_m,"
       "pos_y_m,belief_x_m,belief_y_m,cov_xx_m2,cov_xy_m2,cov_yy_m2,radius_m,"
       "speed_mps,constraint_active,infeasible,safety_violation\n";
  auto n = [](double x) { return format_number(x); };
  for (const auto& st : log.steps) {
    for (std::size_t i = 0; i < st.robots.size(); ++i) {
      const auto& r = st.robots[i];
      o << st.tick << ',' << n(st.time) << ',' << i;
      for (int k = 0; k < 5; ++k) o << ',' << n(r.eta(k));
      o << ',' << n(r.reference.x()) << ',' << n(r.reference.y()) << ','
        << n(r.position.x()) << ',' << n(r.position.y()) << ','
        << n(r.belief_mean.x()) << ',' << n(r.belief_mean.y()) << ','
        << n(r.covariance(0, 0)) << ',' << n(r.covariance(0, 1)) << ','
        << n(r.covariance(1, 1)) << ',' << n(r.radius) << ',' << n(r.speed)
        << ',' << int(r.constraint_active) << ',' << int(r.infeasible) << ','
        << int(r.safety_violation) << '\n';
    }
  }
}

inline void write_pairs_csv(std::ostream& o, const MetricsLog& log) {
  o << "tick,time_s,i,j,distance_m,bound_m\n";
  for (const auto& st : log.steps) {
    for (const auto& p : st.pairs) {
      o << st.tick << ',' << format_number(st.time) << ',' << p.i << ',' << p.j
        << ',' << format_number(p.distance) << ',' << format_number(p.bound)
        << '\n';
    }
  }
}

inline void write_jsonl(std::ostream& o, const MetricsLog& log,
                        const ObstacleMap& obstacles) {
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    o << state_json(log.steps[k], k == 0 ? &obstacles : nullptr).dump() << '\n';
  }
}

/// Writes ticks.csv, states.csv, pairs.csv and stream.jsonl into `dir`.
inline void write_metrics(const std::filesystem::path& dir,
                          const MetricsLog& log, const Scenario& scenario) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw Error(ErrorCode::kIo, "cannot write " +
                                      (dir / name).string());
    }
    return f;
  };
  {
    auto f = open("ticks.csv");
    write_ticks_csv(f, log);
  }
  {
    auto f = open("states.csv");
    write_states_csv(f, log);
  }
  {
    auto f = open("pairs.csv");
    write_pairs_csv(f, log);
  }
  {
    auto f = open("stream.jsonl");
    write_jsonl(f, log, scenario.obstacles);
  }
}

}  // namespace vrbf
