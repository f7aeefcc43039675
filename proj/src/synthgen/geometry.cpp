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

#include "infer/synthgen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace infer::synth {

namespace {

constexpr double kStraightCurvature = 1e-12;

Pose2 advance(const Pose2& p, double u, double curvature) {
  if (std::abs(curvature) < kStraightCurvature) {
    return {p.x + u * std::cos(p.heading), p.y + u * std::sin(p.heading), p.heading};
  }
  const double h = p.heading + curvature * u;
  return {p.x + (std::sin(h) - std::sin(p.heading)) / curvature,
          p.y - (std::cos(h) - std::cos(p.heading)) / curvature, h};
}

}  // namespace

Path::Path(const Pose2& start, std::vector<PathSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw std::invalid_argument("Path: at least one segment required");
  }
  Pose2 pose = start;
  for (const auto& seg : segments_) {
    if (!(seg.length > 0.0)) {
      throw std::invalid_argument("Path: segment lengths must be positive");
    }
    knots_.push_back({length_, pose});
    pose = advance(pose, seg.length, seg.curvature);
    length_ += seg.length;
  }
  knots_.push_back({length_, pose});
}

std::size_t Path::segment_index(double s) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end() - 1, s,
                                   [](double v, const Knot& k) { return v < k.s0; });
  const auto idx = static_cast<std::size_t>(std::distance(knots_.begin(), it));
  return idx == 0 ? 0 : std::min(idx - 1, segments_.size() - 1);
}

Pose2 Path::pose_at(double s) const {
  if (s <= 0.0) {
    return advance(knots_.front().pose, s, 0.0);
  }
  if (s >= length_) {
    return advance(knots_.back().pose, s - length_, 0.0);
  }
  const std::size_t i = segment_index(s);
  return advance(knots_[i].pose, s - knots_[i].s0, segments_[i].curvature);
}

double Path::curvature_at(double s) const {
  if (s < 0.0 || s > length_) {
    return 0.0;
  }
  return segments_[segment_index(s)].curvature;
}

Pose2 Path::offset_pose(double s, double lateral, double lateral_rate) const {
  const Pose2 p = pose_at(s);
  const double k = curvature_at(s);
  const double heading = p.heading + std::atan2(lateral_rate, 1.0 - k * lateral);
  return {p.x - lateral * std::sin(p.heading), p.y + lateral * std::cos(p.heading), heading};
}

std::vector<WorldPoint> Path::polyline(double lateral, double step) const {
  if (!(step > 0.0)) {
    throw std::invalid_argument("Path::polyline: step must be positive");
  }
  const auto n = static_cast<std::size_t>(std::ceil(length_ / step));
  std::vector<WorldPoint> pts;
  pts.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const Pose2 p = offset_pose(length_ * static_cast<double>(i) / static_cast<double>(n), lateral);
    pts.push_back({p.x, p.y});
  }
  return pts;
}

double LateralProfile::offset(double s) const {
  if (s <= start) {
    return from;
  }
  if (span <= 0.0 || s >= start + span) {
    return to;
  }
  const double u = (s - start) / span;
  return from + (to - from) * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

double LateralProfile::rate(double s) const {
  if (span <= 0.0 || s <= start || s >= start + span) {
    return 0.0;
  }
  const double u = (s - start) / span;
  return (to - from) * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u) / span;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("Rng::below: n must be positive");
  }
  return std::min(n - 1, static_cast<std::uint64_t>(uniform() * static_cast<double>(n)));
}

}  // namespace infer::synth
