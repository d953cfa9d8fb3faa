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

// JSON messages of the teleoperation protocol (schema version 1).
//
//   client -> service  {"v":1,"type":"cmd","deta":[dphi,dsx,dsy,dtx,dty],"stamp":ms}
//   service -> client  {"v":1,"type":"state","tick":k,"time":s,"robots":[...],
//                       "pairs":[...],"obstacles":{...}}
//
// "obstacles" is present in the first snapshot of a connection and whenever
// the map changes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vrbf/obstacles.hpp"
#include "vrbf/sim.hpp"
#include "vrbf/types.hpp"

namespace vrbf {

inline constexpr int kProtocolVersion = 1;

/// Per-axis magnitude limits on operator parameter rates.
struct RateLimits {
  double rotation = 0.5;     // rad/s
  double scale = 0.5;        // 1/s
  double translation = 1.0;  // m/s
};

inline Vec5 clamp_command(const Vec5& deta, const RateLimits& lim) {
  const double bounds[5] = {lim.rotation, lim.scale, lim.scale,
                            lim.translation, lim.translation};
  Vec5 out;
  for (int k = 0; k < 5; ++k) out(k) = std::clamp(deta(k), -bounds[k], bounds[k]);
  return out;
}

struct CommandMessage {
  Vec5 deta = Vec5::Zero();
  std::int64_t stamp_ms = 0;
};

namespace detail {

[[noreturn]] inline void protocol_fail(const std::string& msg) {
  throw Error(ErrorCode::kProtocol, msg);
}

}  // namespace detail

/// Parses and clamps a client command. Throws kProtocol on anything malformed.
inline CommandMessage parse_command(std::string_view text,
                                    const RateLimits& limits = {}) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) detail::protocol_fail("command is not a JSON object");
  const auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion) {
    detail::protocol_fail("unsupported protocol version");
  }
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string() || type->get<std::string>() != "cmd") {
    detail::protocol_fail("expected type \"cmd\"");
  }
  const auto deta = j.find("deta");
  if (deta == j.end() || !deta->is_array() || deta->size() != 5) {
    detail::protocol_fail("deta must be an array of 5 numbers");
  }
  CommandMessage out;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& x = (*deta)[k];
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      detail::protocol_fail("deta must be an array of 5 finite numbers");
    }
    out.deta(static_cast<int>(k)) = x.get<double>();
  }
  const auto stamp = j.find("stamp");
  if (stamp == j.end() || !stamp->is_number_integer()) detail::protocol_fail("stamp must be an integer");
  out.stamp_ms = stamp->get<std::int64_t>();
  out.deta = clamp_command(out.deta, limits);
  return out;
}

inline std::string command_json(const Vec5& deta, std::int64_t stamp_ms) {
  nlohmann::json j = {{"v", kProtocolVersion},
                      {"type", "cmd"},
                      {"deta", {deta(0), deta(1), deta(2), deta(3), deta(4)}},
                      {"stamp", stamp_ms}};
  return j.dump();
}

inline nlohmann::json obstacles_json(const ObstacleMap& map) {
  nlohmann::json circles = nlohmann::json::array();
  for (const auto& c : map.circles) {
    circles.push_back({{"center", {c.center.x(), c.center.y()}}, {"radius", c.radius}});
  }
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : map.segments) {
    segments.push_back({{s.from.x(), s.from.y()}, {s.to.x(), s.to.y()}});
  }
  return {{"circles", circles}, {"segments", segments}};
}

inline nlohmann::json state_json(const StepRecord& rec,
                                 const ObstacleMap* obstacles = nullptr) {
  nlohmann::json robots = nlohmann::json::array();
  for (std::size_t i = 0; i < rec.robots.size(); ++i) {
    const auto& r = rec.robots[i];
    robots.push_back({
        {"id", i},
        {"position", {r.position.x(), r.position.y()}},
        {"reference", {r.reference.x(), r.reference.y()}},
        {"belief", {r.belief_mean.x(), r.belief_mean.y()}},
        {"cov", {r.covariance(0, 0), r.covariance(0, 1), r.covariance(1, 1)}},
        {"radius", r.radius},
        {"eta", {r.eta(0), r.eta(1), r.eta(2), r.eta(3), r.eta(4)}},
        {"constraint_active", r.constraint_active},
    });
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : rec.pairs) {
    pairs.push_back({{"i", p.i}, {"j", p.j}, {"distance", p.distance}, {"bound", p.bound}});
  }
  nlohmann::json j = {{"v", kProtocolVersion}, {"type", "state"},
                      {"tick", rec.tick},      {"time", rec.time},
                      {"robots", robots},      {"pairs", pairs}};
  if (obstacles) j["obstacles"] = obstacles_json(*obstacles);
  return j;
}

}  // namespace vrbf
