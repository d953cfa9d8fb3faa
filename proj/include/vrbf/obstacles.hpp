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
#include <optional>
#include <vector>

#include "vrbf/types.hpp"

namespace vrbf {

struct CircleObstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct SegmentObstacle {
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
};

/// Closest obstacle point to a query position. distance is signed for
/// circles (negative inside the disc).
struct NearestObstacle {
  Vec2 point = Vec2::Zero();
  double distance = 0.0;
};

inline Vec2 closest_point_on_segment(const SegmentObstacle& seg,
                                     const Vec2& p) {
  const Vec2 d = seg.to - seg.from;
  const double len_sq = d.squaredNorm();
  if (len_sq == 0.0) return seg.from;
  const double t = std::clamp((p - seg.from).dot(d) / len_sq, 0.0, 1.0);
  return seg.from + t * d;
}

class ObstacleMap {
 public:
  std::vector<CircleObstacle> circles;
  std::vector<SegmentObstacle> segments;

  bool empty() const { return circles.empty() && segments.empty(); }

  void validate() const {
    for (const auto& c : circles) {
      if (!c.center.allFinite() || !(c.radius > 0.0) ||
          !std::isfinite(c.radius)) {
        throw Error(ErrorCode::kConfigurationInvalid,
                    "circle obstacles need a finite center and radius > 0");
      }
    }
    for (const auto& s : segments) {
      if (!s.from.allFinite() || !s.to.allFinite()) {
        throw Error(ErrorCode::kConfigurationInvalid,
                    "non-finite wall segment");
      }
    }
  }

  std::optional<NearestObstacle> nearest(const Vec2& p) const {
    std::optional<NearestObstacle> best;
    auto consider = [&](const Vec2& point, double distance) {
      if (!best || distance < best->distance) best = {point, distance};
    };
    for (const auto& c : circles) {
      const Vec2 d = p - c.center;
      const double n = d.norm();
      const Vec2 dir = n > 0.0 ? Vec2(d / n) : Vec2(1.0, 0.0);
      consider(c.center + c.radius * dir, n - c.radius);
    }
    for (const auto& s : segments) {
      const Vec2 q = closest_point_on_segment(s, p);
      consider(q, (p - q).norm());
    }
    return best;
  }

  bool operator==(const ObstacleMap& other) const {
    auto circle_eq = [](const CircleObstacle& a, const CircleObstacle& b) {
      return a.center == b.center && a.radius == b.radius;
    };
    auto seg_eq = [](const SegmentObstacle& a, const SegmentObstacle& b) {
      return a.from == b.from && a.to == b.to;
    };
    return std::equal(circles.begin(), circles.end(), other.circles.begin(),
                      other.circles.end(), circle_eq) &&
           std::equal(segments.begin(), segments.end(), other.segments.begin(),
                      other.segments.end(), seg_eq);
  }
};

}  // namespace vrbf
