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

#ifndef INFER_SYNTHGEN_RENDER_HPP
#define INFER_SYNTHGEN_RENDER_HPP

#include <span>
#include <vector>

#include "infer/gridcore/grid.hpp"
#include "infer/synthgen/generator.hpp"

namespace infer::synth {

/// The channels a map prior can supply ahead of time. Vehicle channels are never part of it.
struct StaticChannels {
  grid::SemanticGrid obstacles;
  grid::SemanticGrid road;
  grid::SemanticGrid lane;
};

/// All five channels in the ego frame at timestamp t. Throws std::out_of_range for off-grid t.
[[nodiscard]] grid::FrameStack render_frame(const Scenario& s, double t);
[[nodiscard]] grid::FrameStack render_frame_at(const Scenario& s, std::size_t frame);
[[nodiscard]] std::vector<grid::FrameStack> render_all_frames(const Scenario& s);

/**
 * Static channels seen from the ego pose at timestamp t, as an offline map would
 * provide them for a future frame. Throws std::out_of_range beyond the horizon.
 */
[[nodiscard]] StaticChannels future_static_channels(const Scenario& s, double t);

/// Copies the static channels out of a rendered frame.
[[nodiscard]] StaticChannels static_channels_of(const grid::FrameStack& f);

/// Marks cells whose centers fall inside the convex polygon (world frame) seen from `ego`.
void fill_convex_polygon(grid::SemanticGrid& g, const grid::Pose2& ego, std::span<const grid::WorldPoint> polygon);

/// Marks cells whose centers lie within `radius` of the world-frame polyline.
void fill_polyline(grid::SemanticGrid& g, const grid::Pose2& ego, std::span<const grid::WorldPoint> line, double radius);

/// Filled oriented rectangle of a vehicle centered at `pose`.
void fill_vehicle(grid::SemanticGrid& g, const grid::Pose2& ego, const grid::Pose2& pose);

/**
 * Subsampled frame indices for a keep ratio in (0, 1]: count = floor(n r), index
 * k = floor(k n / count). Throws std::invalid_argument for a bad ratio or empty result.
 */
[[nodiscard]] std::vector<std::size_t> subsample_indices(std::size_t n, double keep_ratio);

/// Frames at subsample_indices(); timestamps are preserved, so the frame rate drops.
[[nodiscard]] std::vector<grid::FrameStack> subsample_frames(std::span<const grid::FrameStack> frames,
                                                             double keep_ratio);

}  // namespace infer::synth

#endif
