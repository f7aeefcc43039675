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

#ifndef INFER_SYNTHGEN_GENERATOR_HPP
#define INFER_SYNTHGEN_GENERATOR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "infer/gridcore/grid.hpp"
#include "infer/synthgen/geometry.hpp"

/**
 * \file
 * \brief Synthetic urban scenarios: a road with two lanes per direction, flanking
 * obstacles, an ego vehicle following the vehicle of interest, and other traffic.
 *
 * The world is built for right-hand traffic. A left-hand scenario is the same
 * world mirrored about the world x axis (y -> -y, heading -> -heading), so turn
 * directions flip with it and rendered frames are row reflections of each other.
 */

namespace infer::synth {

enum class RoadFamily { kStraight, kCurve, kLeftTurn, kRightTurn, kLaneChange };
enum class LaneSide { kRightHand, kLeftHand };

[[nodiscard]] std::string_view family_name(RoadFamily f);
[[nodiscard]] RoadFamily family_from_name(std::string_view name);
[[nodiscard]] std::string_view lane_side_name(LaneSide s);
[[nodiscard]] LaneSide lane_side_from_name(std::string_view name);

inline constexpr double kLaneWidth = 3.5;
inline constexpr double kRoadWidth = 4.0 * kLaneWidth;
inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 1.8;

struct GeneratorConfig {
  RoadFamily family = RoadFamily::kStraight;
  LaneSide lane_side = LaneSide::kRightHand;
  double duration_s = 6.0;
  double frame_rate_hz = 10.0;
  double speed_min = 5.0;  ///< m/s
  double speed_max = 9.0;
  std::size_t max_others = 3;
  bool obstacles = true;
  grid::GridSpec render_spec{512, 0.25};
  /// Probability of erasing each occupied static-channel cell, emulating segmentation errors.
  double static_dropout = 0.0;

  /// Throws ConfigError on out-of-range fields and on infeasible combinations.
  void validate() const;
  [[nodiscard]] std::size_t frame_count() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RoadGeometry {
  std::vector<WorldPoint> centerline;
  double width = kRoadWidth;
  std::vector<std::vector<WorldPoint>> lane_lines;  ///< dividers and edges
};

struct Scenario {
  std::uint64_t seed = 0;
  GeneratorConfig config;
  RoadGeometry road;
  std::vector<std::vector<WorldPoint>> obstacles;  ///< convex polygons
  std::vector<double> timestamps;                  ///< k / frame_rate_hz
  std::vector<Pose2> ego_track;
  std::vector<Pose2> target_track;
  std::vector<std::vector<Pose2>> other_tracks;

  [[nodiscard]] std::size_t frame_count() const { return timestamps.size(); }
  [[nodiscard]] double frame_rate_hz() const { return config.frame_rate_hz; }
  [[nodiscard]] const grid::GridSpec& render_spec() const { return config.render_spec; }

  /// Frame index of timestamp t; throws std::out_of_range when t is not on the grid.
  [[nodiscard]] std::size_t frame_index(double t) const;
};

/// Pure function of (config, seed).
[[nodiscard]] Scenario generate_scenario(const GeneratorConfig& config, std::uint64_t seed);

/// Reflects all world geometry and tracks about the world x axis.
[[nodiscard]] Scenario mirror_scenario(const Scenario& s);

}  // namespace infer::synth

#endif
