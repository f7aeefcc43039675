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


#ifndef INFER_EVALKIT_PLOTS_HPP
#define INFER_EVALKIT_PLOTS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "infer/evalkit/metrics.hpp"
#include "infer/gridcore/grid.hpp"

/**
 * \file
 * \brief Dependency-free plot output: binary PPM/PGM rasters and SVG overlays.
 * Nothing time-dependent is written, so equal inputs give equal bytes.
 */

namespace infer::eval {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  ///< row-major, 3 bytes per pixel

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void write_ppm(const std::filesystem::path& path, const Image& image);

/// Grayscale rendering of a grid, value 1 as white; row 0 at the top.
void write_pgm(const std::filesystem::path& path, const grid::SemanticGrid& grid);

/// Trajectories to draw over one frame, all in the world frame.
struct OverlayTracks {
  std::vector<WorldPoint> observed;
  std::vector<WorldPoint> truth;
  std::vector<WorldPoint> predicted;
};

/**
 * The frame's static channels (road, lane, obstacles) and other traffic as a
 * background, with observed (blue), ground-truth (green) and predicted (red)
 * positions drawn in the frame's sensor coordinates. Each cell becomes a
 * `scale` x `scale` block.
 */
[[nodiscard]] Image render_overlay(const grid::FrameStack& frame, const OverlayTracks& tracks, std::size_t scale);

/// The same overlay as vector graphics; static channels are merged into row runs.
[[nodiscard]] std::string overlay_svg(const grid::FrameStack& frame, const OverlayTracks& tracks);

[[nodiscard]] std::string histogram_svg(const Histogram& h);

}  // namespace infer::eval

#endif
