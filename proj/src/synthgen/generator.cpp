// Copyright 2026 The infer-bev Authors
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

#include "infer/synthgen/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace infer::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInnerLane = -0.5 * kLaneWidth;
constexpr double kOuterLane = -1.5 * kLaneWidth;
constexpr double kMinTurnRadius = 8.0;
constexpr double kMaxTurnRadius = 15.0;
constexpr double kTableStep = 0.05;
constexpr int kPlacementAttempts = 16;

constexpr std::array<std::string_view, 5> kFamilyNames{"straight", "curve", "left-turn", "right-turn", "lane-change"};

std::string format_m(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct AgentPlan {
  LateralProfile lateral;
  double s_start = 0.0;
  double speed = 0.0;
  bool reverse = false;
};

// Samples the displaced curve finely, then maps travelled distance v t back to arc length.
std::vector<Pose2> build_track(const Path& path, const AgentPlan& plan, const std::vector<double>& times) {
  const double total = plan.speed * times.back() + 1.0;
  const double dir = plan.reverse ? -1.0 : 1.0;
  std::vector<double> table_s{plan.s_start};
  std::vector<double> table_d{0.0};
  Pose2 prev = path.offset_pose(plan.s_start, plan.lateral.offset(plan.s_start));
  while (table_d.back() < total) {
    const double s = table_s.back() + dir * kTableStep;
    const Pose2 p = path.offset_pose(s, plan.lateral.offset(s));
    table_d.push_back(table_d.back() + std::hypot(p.x - prev.x, p.y - prev.y));
    table_s.push_back(s);
    prev = p;
  }
  std::vector<Pose2> track;
  track.reserve(times.size());
  std::size_t j = 0;
  for (const double t : times) {
    const double d = plan.speed * t;
    while (j + 2 < table_d.size() && table_d[j + 1] < d) {
      ++j;
    }
    const double span = table_d[j + 1] - table_d[j];
    const double u = span > 0.0 ? std::clamp((d - table_d[j]) / span, 0.0, 1.0) : 0.0;
    const double s = table_s[j] + u * (table_s[j + 1] - table_s[j]);
    Pose2 p = path.offset_pose(s, plan.lateral.offset(s), plan.lateral.rate(s));
    if (plan.reverse) {
      p.heading += kPi;
    }
    p.heading = wrap_angle(p.heading);
    track.push_back(p);
  }
  return track;
}

double distance_to_polyline(const WorldPoint& p, const std::vector<WorldPoint>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double ax = line[i + 1].x - line[i].x;
    const double ay = line[i + 1].y - line[i].y;
    const double len2 = ax * ax + ay * ay;
    double u = len2 > 0.0 ? ((p.x - line[i].x) * ax + (p.y - line[i].y) * ay) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    best = std::min(best, std::hypot(p.x - line[i].x - u * ax, p.y - line[i].y - u * ay));
  }
  return best;
}

std::vector<WorldPoint> oriented_rectangle(const Pose2& center, double length, double width) {
  const double c = std::cos(center.heading);
  const double s = std::sin(center.heading);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  std::vector<WorldPoint> pts;
  for (const auto& [a, b] : std::array<std::pair<double, double>, 4>{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}}) {
    pts.push_back({center.x + a * c - b * s, center.y + a * s + b * c});
  }
  return pts;
}

bool inside_grid(const grid::Pose2& ego, const grid::Pose2& p, const grid::GridSpec& spec, double margin) {
  const auto m = grid::to_sensor_frame(ego, {p.x, p.y});
  const double half = 0.5 * spec.extent();
  return m.z >= margin && m.z <= spec.extent() - margin && std::abs(m.x) <= half - margin;
}

struct RoadPlan {
  std::vector<PathSegment> segments;
  LateralProfile target_lateral;
};

RoadPlan plan_road(const GeneratorConfig& cfg, Rng& rng, double lead, double travel, double tail) {
  RoadPlan plan;
  plan.target_lateral = {kInnerLane, kInnerLane, 0.0, 0.0};
  switch (cfg.family) {
    case RoadFamily::kStraight:
      plan.segments = {{lead + travel + tail, 0.0}};
      break;
    case RoadFamily::kCurve: {
      const double angle = rng.uniform(20.0, 45.0) * kPi / 180.0;
      const double sign = rng.chance(0.5) ? 1.0 : -1.0;
      const double radius = rng.uniform(30.0, 60.0);
      const double u0 = rng.uniform(0.1, 0.5) * travel;
      plan.segments = {{lead + u0, 0.0}, {radius * angle, sign / radius}, {travel + tail, 0.0}};
      break;
    }
    case RoadFamily::kLeftTurn:
    case RoadFamily::kRightTurn: {
      const double sign = cfg.family == RoadFamily::kLeftTurn ? 1.0 : -1.0;
      const double angle = 0.5 * kPi;
      // Radius of the target lane: the inner right-hand lane sits outside a left turn.
      const double lane_shift = -sign * kInnerLane;
      double radius = rng.uniform(kMinTurnRadius, kMaxTurnRadius);
      const double budget = 0.8 * travel;
      if ((radius + lane_shift) * angle > budget) {
        radius = budget / angle - lane_shift;
      }
      if (radius < kMinTurnRadius) {
        throw ConfigError("turn cannot complete: a " + format_m(travel) + " m trajectory is too short for a " +
                          format_m(kMinTurnRadius) + " m radius turn; raise the speed or the duration");
      }
      const double lane_arc = (radius + lane_shift) * angle;
      const double u0 = rng.uniform(0.1 * travel, std::max(0.1 * travel, 0.95 * travel - lane_arc));
      plan.segments = {{lead + u0, 0.0}, {radius * angle, sign / radius}, {travel + tail, 0.0}};
      break;
    }
    case RoadFamily::kLaneChange: {
      const bool outward = rng.chance(0.5);
      const double u0 = rng.uniform(0.1, 0.4) * travel;
      const double span = std::min(rng.uniform(25.0, 40.0), std::max(10.0, 0.85 * travel - u0));
      plan.target_lateral = {outward ? kInnerLane : kOuterLane, outward ? kOuterLane : kInnerLane, lead + u0, span};
      plan.segments = {{lead + travel + tail, 0.0}};
      break;
    }
  }
  return plan;
}

std::vector<std::vector<WorldPoint>> place_obstacles(const Path& path, const std::vector<WorldPoint>& centerline,
                                                     Rng& rng) {
  std::vector<std::vector<WorldPoint>> out;
  const double clearance = 0.5 * kRoadWidth + 0.3;
  for (double s = rng.uniform(0.0, 6.0); s < path.length(); s += rng.uniform(6.0, 14.0)) {
    for (const double side : {1.0, -1.0}) {
      const bool present = rng.chance(0.6);
      const double length = rng.uniform(3.0, 10.0);
      const double depth = rng.uniform(2.0, 6.0);
      const double margin = rng.uniform(1.0, 4.0);
      if (!present) {
        continue;
      }
      const Pose2 center = path.offset_pose(s + 0.5 * length, side * (0.5 * kRoadWidth + margin + 0.5 * depth));
      auto rect = oriented_rectangle(center, length, depth);
      bool clear = distance_to_polyline({center.x, center.y}, centerline) >= clearance;
      for (std::size_t i = 0; i < rect.size() && clear; ++i) {
        const auto& a = rect[i];
        const auto& b = rect[(i + 1) % rect.size()];
        clear = distance_to_polyline(a, centerline) >= clearance &&
                distance_to_polyline({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}, centerline) >= clearance;
      }
      if (clear) {
        out.push_back(std::move(rect));
      }
    }
  }
  return out;
}

Scenario build_right_hand(const GeneratorConfig& cfg, std::uint64_t seed, Rng& rng) {
  Scenario sc;
  sc.seed = seed;
  sc.config = cfg;
  sc.config.lane_side = LaneSide::kRightHand;
  const std::size_t frames = cfg.frame_count();
  for (std::size_t k = 0; k < frames; ++k) {
    sc.timestamps.push_back(static_cast<double>(k) / cfg.frame_rate_hz);
  }
  const double extent = cfg.render_spec.extent();
  const Pose2 origin{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), rng.uniform(-kPi, kPi)};
  const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
  const double travel = speed * sc.timestamps.back();
  const double gap = rng.uniform(8.0, 20.0);
  const double ego_speed = speed * rng.uniform(0.8, 1.0);
  const double lead = extent + gap + 10.0;
  const double tail = extent + 20.0;

  const RoadPlan road = plan_road(cfg, rng, lead, travel, tail);
  const Path path(origin, road.segments);

  sc.road.centerline = path.polyline(0.0, 1.0);
  for (const double lat : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    sc.road.lane_lines.push_back(path.polyline(lat * kLaneWidth, 1.0));
  }

  sc.target_track = build_track(path, {road.target_lateral, lead, speed, false}, sc.timestamps);
  const double ego_lane = road.target_lateral.from;
  sc.ego_track = build_track(path, {{ego_lane, ego_lane, 0.0, 0.0}, lead - gap, ego_speed, false}, sc.timestamps);

  const std::size_t others = static_cast<std::size_t>(rng.below(cfg.max_others + 1));
  for (std::size_t i = 0; i < others; ++i) {
    std::uint64_t kind = rng.below(3);
    if (cfg.family == RoadFamily::kLaneChange && kind == 0) {
      kind = 2;
    }
    const double v = rng.uniform(cfg.speed_min, cfg.speed_max);
    if (kind == 0) {
      const double s0 = lead + rng.uniform(-15.0, 25.0);
      sc.other_tracks.push_back(build_track(path, {{kOuterLane, kOuterLane, 0.0, 0.0}, s0, v, false}, sc.timestamps));
    } else {
      const double lane = kind == 1 ? -kInnerLane : -kOuterLane;
      const double s0 = lead + rng.uniform(10.0, travel + 40.0);
      sc.other_tracks.push_back(build_track(path, {{lane, lane, 0.0, 0.0}, s0, v, true}, sc.timestamps));
    }
  }

  if (cfg.obstacles) {
    sc.obstacles = place_obstacles(path, sc.road.centerline, rng);
  }
  return sc;
}

bool target_visible(const Scenario& sc) {
  for (std::size_t k = 0; k < sc.frame_count(); ++k) {
    if (!inside_grid(sc.ego_track[k], sc.target_track[k], sc.config.render_spec, 2.0)) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view family_name(RoadFamily f) { return kFamilyNames.at(static_cast<std::size_t>(f)); }

RoadFamily family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == name) {
      return static_cast<RoadFamily>(i);
    }
  }
  throw ConfigError("unknown road family '" + std::string(name) +
                    "' (expected straight, curve, left-turn, right-turn or lane-change)");
}

std::string_view lane_side_name(LaneSide s) { return s == LaneSide::kRightHand ? "right" : "left"; }

LaneSide lane_side_from_name(std::string_view name) {
  if (name == "right") {
    return LaneSide::kRightHand;
  }
  if (name == "left") {
    return LaneSide::kLeftHand;
  }
  throw ConfigError("unknown lane side '" + std::string(name) + "' (expected right or left)");
}

std::size_t GeneratorConfig::frame_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * frame_rate_hz));
}

void GeneratorConfig::validate() const {
  if (!(duration_s > 0.0) || !(frame_rate_hz > 0.0)) {
    throw ConfigError("duration and frame rate must be positive");
  }
  if (frame_count() < 2) {
    throw ConfigError("a scenario needs at least 2 frames");
  }
  if (!(speed_min > 0.0) || speed_max < speed_min) {
    throw ConfigError("speed range must satisfy 0 < speed_min <= speed_max");
  }
  if (!(static_dropout >= 0.0 && static_dropout < 1.0)) {
    throw ConfigError("static_dropout must lie in [0, 1)");
  }
  const double reach = speed_max * duration_s;
  if (reach > render_spec.extent()) {
    throw ConfigError("infeasible config: speed x duration = " + format_m(reach) + " m exceeds the map extent of " +
                      format_m(render_spec.extent()) + " m");
  }
  if (family == RoadFamily::kLeftTurn || family == RoadFamily::kRightTurn) {
    const double shortest = 0.8 * speed_min * static_cast<double>(frame_count() - 1) / frame_rate_hz;
    const double needed = (kMinTurnRadius - kInnerLane) * 0.5 * kPi;
    if (shortest < needed) {
      throw ConfigError("infeasible config: a turn needs " + format_m(needed / 0.8) +
                        " m of travel but the slowest vehicle covers " + format_m(shortest / 0.8) + " m");
    }
  }
}

std::size_t Scenario::frame_index(double t) const {
  const double k = t * config.frame_rate_hz;
  const double r = std::round(k);
  if (!(t >= 0.0) || std::abs(k - r) > 1e-6 || r >= static_cast<double>(frame_count())) {
    throw std::out_of_range("timestamp " + format_m(t) + " s is not on the scenario's frame grid");
  }
  return static_cast<std::size_t>(r);
}

Scenario generate_scenario(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    Scenario sc = build_right_hand(config, seed, rng);
    if (!target_visible(sc)) {
      continue;
    }
    return config.lane_side == LaneSide::kLeftHand ? mirror_scenario(sc) : sc;
  }
  throw ConfigError("could not keep the vehicle of interest inside the ego grid; enlarge the grid or shorten the "
                    "scenario");
}

Scenario mirror_scenario(const Scenario& s) {
  Scenario m = s;
  auto flip_point = [](WorldPoint& p) { p.y = -p.y; };
  auto flip_pose = [](Pose2& p) {
    p.y = -p.y;
    p.heading = wrap_angle(-p.heading);
  };
  for (auto& p : m.road.centerline) {
    flip_point(p);
  }
  for (auto& line : m.road.lane_lines) {
    std::for_each(line.begin(), line.end(), flip_point);
  }
  for (auto& poly : m.obstacles) {
    std::for_each(poly.begin(), poly.end(), flip_point);
  }
  std::for_each(m.ego_track.begin(), m.ego_track.end(), flip_pose);
  std::for_each(m.target_track.begin(), m.target_track.end(), flip_pose);
  for (auto& t : m.other_tracks) {
    std::for_each(t.begin(), t.end(), flip_pose);
  }
  m.config.lane_side = s.config.lane_side == LaneSide::kRightHand ? LaneSide::kLeftHand : LaneSide::kRightHand;
  return m;
}

}  // namespace infer::synth
