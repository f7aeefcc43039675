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

#ifndef INFER_SYNTHGEN_GEOMETRY_HPP
#define INFER_SYNTHGEN_GEOMETRY_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "infer/gridcore/grid.hpp"

namespace infer::synth {

using grid::Pose2;
using grid::WorldPoint;

/// Constant-curvature piece of a road centerline. Positive curvature turns left.
struct PathSegment {
  double length = 0.0;
  double curvature = 0.0;
};

/**
 * Planar clothoid-free path made of straight and circular pieces, parameterized
 * by arc length s. Queries outside [0, length()] extend the end tangents.
 */
class Path {
 public:
  Path() = default;
  Path(const Pose2& start, std::vector<PathSegment> segments);

  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] const std::vector<PathSegment>& segments() const { return segments_; }

  [[nodiscard]] Pose2 pose_at(double s) const;
  [[nodiscard]] double curvature_at(double s) const;

  /**
   * Pose on the curve displaced `lateral` meters to the left of the centerline.
   * `lateral_rate` is d(lateral)/ds; the heading is that of the displaced curve.
   */
  [[nodiscard]] Pose2 offset_pose(double s, double lateral, double lateral_rate = 0.0) const;

  /// Points of the displaced curve every `step` meters (both ends included).
  [[nodiscard]] std::vector<WorldPoint> polyline(double lateral, double step) const;

 private:
  struct Knot {
    double s0 = 0.0;
    Pose2 pose;
  };

  [[nodiscard]] std::size_t segment_index(double s) const;

  std::vector<PathSegment> segments_;
  std::vector<Knot> knots_;
  double length_ = 0.0;
};

/// Lateral offset that blends from `from` to `to` with a half-cosine over [start, start + span].
struct LateralProfile {
  double from = 0.0;
  double to = 0.0;
  double start = 0.0;
  double span = 0.0;

  [[nodiscard]] double offset(double s) const;
  [[nodiscard]] double rate(double s) const;
};

/// Wraps an angle to (-pi, pi].
[[nodiscard]] double wrap_angle(double a);

/// Uniform draws built directly on std::mt19937_64, whose output sequence is fixed by
/// the standard (the std distributions are not), so scenarios match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  [[nodiscard]] double uniform();  ///< [0, 1)
  [[nodiscard]] double uniform(double lo, double hi);
  [[nodiscard]] std::uint64_t below(std::uint64_t n);  ///< integer in [0, n)
  [[nodiscard]] bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace infer::synth

#endif
