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

#include "infer/synthgen/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace infer::synth {

namespace {

using grid::Channel;
using grid::MetricPoint;
using grid::SemanticGrid;

struct CellRange {
  std::size_t r0 = 1;
  std::size_t r1 = 0;
  std::size_t c0 = 1;
  std::size_t c1 = 0;
  [[nodiscard]] bool empty() const { return r0 > r1 || c0 > c1; }
};

// Cells whose centers fall inside the metric box [xmin, xmax] x [zmin, zmax].
CellRange cells_in_box(const grid::GridSpec& spec, double xmin, double xmax, double zmin, double zmax) {
  const double half = static_cast<double>(spec.side() / 2);
  const double res = spec.resolution();
  const double last = static_cast<double>(spec.side()) - 1.0;
  const double r0 = std::max(0.0, std::ceil(half - xmax / res - 0.5));
  const double r1 = std::min(last, std::floor(half - xmin / res - 0.5));
  const double c0 = std::max(0.0, std::ceil(zmin / res - 0.5));
  const double c1 = std::min(last, std::floor(zmax / res - 0.5));
  if (r0 > r1 || c0 > c1) {
    return {};
  }
  return {static_cast<std::size_t>(r0), static_cast<std::size_t>(r1), static_cast<std::size_t>(c0),
          static_cast<std::size_t>(c1)};
}

MetricPoint cell_center(const grid::GridSpec& spec, std::size_t r, std::size_t c) {
  const double half = static_cast<double>(spec.side() / 2);
  return {(half - static_cast<double>(r) - 0.5) * spec.resolution(), (static_cast<double>(c) + 0.5) * spec.resolution()};
}

double lane_line_radius(const grid::GridSpec& spec) { return std::max(0.1, 0.75 * spec.resolution()); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

void apply_dropout(SemanticGrid& g, const Scenario& s, std::size_t frame, std::size_t channel) {
  const double p = s.config.static_dropout;
  if (p <= 0.0) {
    return;
  }
  const std::uint64_t base = splitmix64(splitmix64(s.seed) ^ (frame * 8 + channel));
  auto values = g.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0F) {
      const double u = static_cast<double>(splitmix64(base ^ i) >> 11U) * 0x1.0p-53;
      if (u < p) {
        values[i] = 0.0F;
      }
    }
  }
}

StaticChannels render_static(const Scenario& s, std::size_t frame) {
  const auto& spec = s.render_spec();
  const auto& ego = s.ego_track.at(frame);
  StaticChannels out{SemanticGrid{spec}, SemanticGrid{spec}, SemanticGrid{spec}};
  fill_polyline(out.road, ego, s.road.centerline, 0.5 * s.road.width);
  for (const auto& line : s.road.lane_lines) {
    fill_polyline(out.lane, ego, line, lane_line_radius(spec));
  }
  for (const auto& poly : s.obstacles) {
    fill_convex_polygon(out.obstacles, ego, poly);
  }
  apply_dropout(out.obstacles, s, frame, 0);
  apply_dropout(out.road, s, frame, 1);
  apply_dropout(out.lane, s, frame, 2);
  return out;
}

}  // namespace

void fill_convex_polygon(SemanticGrid& g, const grid::Pose2& ego, std::span<const grid::WorldPoint> polygon) {
  if (polygon.size() < 3) {
    throw std::invalid_argument("fill_convex_polygon: need at least 3 vertices");
  }
  std::vector<MetricPoint> m;
  m.reserve(polygon.size());
  double xmin = 1e300;
  double xmax = -1e300;
  double zmin = 1e300;
  double zmax = -1e300;
  for (const auto& p : polygon) {
    m.push_back(grid::to_sensor_frame(ego, p));
    xmin = std::min(xmin, m.back().x);
    xmax = std::max(xmax, m.back().x);
    zmin = std::min(zmin, m.back().z);
    zmax = std::max(zmax, m.back().z);
  }
  const auto range = cells_in_box(g.spec(), xmin, xmax, zmin, zmax);
  if (range.empty()) {
    return;
  }
  for (std::size_t r = range.r0; r <= range.r1; ++r) {
    for (std::size_t c = range.c0; c <= range.c1; ++c) {
      const MetricPoint q = cell_center(g.spec(), r, c);
      bool pos = false;
      bool neg = false;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& a = m[i];
        const auto& b = m[(i + 1) % m.size()];
        const double cross = (b.x - a.x) * (q.z - a.z) - (b.z - a.z) * (q.x - a.x);
        pos = pos || cross > 0.0;
        neg = neg || cross < 0.0;
      }
      if (!(pos && neg)) {
        g.at(r, c) = 1.0F;
      }
    }
  }
}

void fill_polyline(SemanticGrid& g, const grid::Pose2& ego, std::span<const grid::WorldPoint> line, double radius) {
  std::vector<MetricPoint> m;
  m.reserve(line.size());
  for (const auto& p : line) {
    m.push_back(grid::to_sensor_frame(ego, p));
  }
  if (m.size() == 1) {
    m.push_back(m.front());
  }
  const double r2 = radius * radius;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const MetricPoint a = m[i];
    const MetricPoint b = m[i + 1];
    const auto range = cells_in_box(g.spec(), std::min(a.x, b.x) - radius, std::max(a.x, b.x) + radius,
                                    std::min(a.z, b.z) - radius, std::max(a.z, b.z) + radius);
    if (range.empty()) {
      continue;
    }
    const double ax = b.x - a.x;
    const double az = b.z - a.z;
    const double len2 = ax * ax + az * az;
    for (std::size_t r = range.r0; r <= range.r1; ++r) {
      for (std::size_t c = range.c0; c <= range.c1; ++c) {
        const MetricPoint q = cell_center(g.spec(), r, c);
        double u = len2 > 0.0 ? ((q.x - a.x) * ax + (q.z - a.z) * az) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double dx = q.x - a.x - u * ax;
        const double dz = q.z - a.z - u * az;
        if (dx * dx + dz * dz <= r2) {
          g.at(r, c) = 1.0F;
        }
      }
    }
  }
}

void fill_vehicle(SemanticGrid& g, const grid::Pose2& ego, const grid::Pose2& pose) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const double hl = 0.5 * kVehicleLength;
  const double hw = 0.5 * kVehicleWidth;
  const std::array<grid::WorldPoint, 4> corners{{{pose.x + hl * c - hw * s, pose.y + hl * s + hw * c},
                                                 {pose.x - hl * c - hw * s, pose.y - hl * s + hw * c},
                                                 {pose.x - hl * c + hw * s, pose.y - hl * s - hw * c},
                                                 {pose.x + hl * c + hw * s, pose.y + hl * s - hw * c}}};
  fill_convex_polygon(g, ego, corners);
}

grid::FrameStack render_frame_at(const Scenario& s, std::size_t frame) {
  if (frame >= s.frame_count()) {
    throw std::out_of_range("render_frame_at: frame " + std::to_string(frame) + " beyond scenario length " +
                            std::to_string(s.frame_count()));
  }
  const auto& ego = s.ego_track[frame];
  auto f = grid::make_empty_frame(s.render_spec(), s.timestamps[frame], ego);
  auto statics = render_static(s, frame);
  f.channel(Channel::kObstacles) = std::move(statics.obstacles);
  f.channel(Channel::kRoad) = std::move(statics.road);
  f.channel(Channel::kLane) = std::move(statics.lane);
  fill_vehicle(f.channel(Channel::kTarget), ego, s.target_track[frame]);
  for (const auto& track : s.other_tracks) {
    fill_vehicle(f.channel(Channel::kOthers), ego, track[frame]);
  }
  return f;
}

grid::FrameStack render_frame(const Scenario& s, double t) { return render_frame_at(s, s.frame_index(t)); }

std::vector<grid::FrameStack> render_all_frames(const Scenario& s) {
  std::vector<grid::FrameStack> frames;
  frames.reserve(s.frame_count());
  for (std::size_t k = 0; k < s.frame_count(); ++k) {
    frames.push_back(render_frame_at(s, k));
  }
  return frames;
}

StaticChannels future_static_channels(const Scenario& s, double t) {
  const std::size_t k = s.frame_index(t);
  return render_static(s, k);
}

StaticChannels static_channels_of(const grid::FrameStack& f) {
  return {f.channel(Channel::kObstacles), f.channel(Channel::kRoad), f.channel(Channel::kLane)};
}

std::vector<std::size_t> subsample_indices(std::size_t n, double keep_ratio) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw std::invalid_argument("subsample: keep ratio must lie in (0, 1]");
  }
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * keep_ratio + 1e-9));
  if (count == 0) {
    throw std::invalid_argument("subsample: keep ratio " + std::to_string(keep_ratio) + " leaves no frames out of " +
                                std::to_string(n));
  }
  std::vector<std::size_t> idx(count);
  for (std::size_t k = 0; k < count; ++k) {
    idx[k] = (k * n) / count;
  }
  return idx;
}

std::vector<grid::FrameStack> subsample_frames(std::span<const grid::FrameStack> frames, double keep_ratio) {
  std::vector<grid::FrameStack> out;
  for (const auto i : subsample_indices(frames.size(), keep_ratio)) {
    out.push_back(frames[i]);
  }
  return out;
}

}  // namespace infer::synth
