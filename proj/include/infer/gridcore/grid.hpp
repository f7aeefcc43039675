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

#ifndef INFER_GRIDCORE_GRID_HPP
#define INFER_GRIDCORE_GRID_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Metric bird's-eye-view occupancy grids.
 *
 * Grid convention: the sensor sits at the center-left of the raster. The
 * forward axis Z grows with the column index, the lateral axis X grows
 * toward row 0 (X points to the right-hand side of the sensor). The cell
 * boundary of the origin is at (row = side / 2, col = 0):
 *
 *     col = floor(Z / resolution)
 *     row = side / 2 - 1 - floor(X / resolution)
 */

namespace infer::grid {

/// A metric point in the sensor frame (meters).
struct MetricPoint {
  double x = 0.0;  ///< lateral, positive toward the top of the grid
  double z = 0.0;  ///< forward, positive toward the right of the grid

  friend bool operator==(const MetricPoint&, const MetricPoint&) = default;
};

/// Planar pose in a world frame: position in meters, heading in radians (CCW from +x).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// A world-frame planar point (meters).
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

/// Expresses a world point in the sensor frame of `sensor`.
[[nodiscard]] MetricPoint to_sensor_frame(const Pose2& sensor, const WorldPoint& p);

/// Inverse of to_sensor_frame().
[[nodiscard]] WorldPoint to_world_frame(const Pose2& sensor, const MetricPoint& p);

/// Geometric description of a square raster.
class GridSpec {
 public:
  /// Default 512 x 512 cells at 0.25 m (128 m x 128 m).
  GridSpec() = default;

  /// Throws std::invalid_argument unless side > 0 and resolution > 0.
  GridSpec(std::size_t side, double resolution_m);

  [[nodiscard]] std::size_t side() const { return side_; }
  [[nodiscard]] double resolution() const { return resolution_; }
  [[nodiscard]] std::size_t cell_count() const { return side_ * side_; }
  [[nodiscard]] double extent() const { return static_cast<double>(side_) * resolution_; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  std::size_t side_ = 512;
  double resolution_ = 0.25;
};

/// In-bounds cell address. Only constructible through checked factories.
class CellIndex {
 public:
  /// Throws std::out_of_range when (row, col) lies outside `spec`.
  CellIndex(std::size_t row, std::size_t col, const GridSpec& spec);

  [[nodiscard]] std::size_t row() const { return row_; }
  [[nodiscard]] std::size_t col() const { return col_; }
  [[nodiscard]] std::size_t linear(const GridSpec& spec) const { return row_ * spec.side() + col_; }

  friend bool operator==(const CellIndex&, const CellIndex&) = default;

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Cell containing `p`, or std::nullopt when the point falls outside the grid.
[[nodiscard]] std::optional<CellIndex> metric_to_cell(const MetricPoint& p, const GridSpec& spec);

/// Center of cell `c`. Throws std::out_of_range when `c` does not fit `spec`.
[[nodiscard]] MetricPoint cell_to_metric(const CellIndex& c, const GridSpec& spec);

/// Continuous (row, col) coordinates of a metric point, cell centers at integer + 0.5.
struct CellCoord {
  double row = 0.0;
  double col = 0.0;
};
[[nodiscard]] CellCoord metric_to_cell_coord(const MetricPoint& p, const GridSpec& spec);
[[nodiscard]] MetricPoint cell_coord_to_metric(const CellCoord& c, const GridSpec& spec);

/// Single-channel raster with values in [0, 1], row-major.
class SemanticGrid {
 public:
  SemanticGrid() = default;
  explicit SemanticGrid(const GridSpec& spec) : spec_(spec), values_(spec.cell_count(), 0.0F) {}

  /// Throws std::invalid_argument on size mismatch or values outside [0, 1].
  SemanticGrid(const GridSpec& spec, std::vector<float> values);

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t side() const { return spec_.side(); }

  [[nodiscard]] float at(std::size_t row, std::size_t col) const { return values_[row * spec_.side() + col]; }
  [[nodiscard]] float& at(std::size_t row, std::size_t col) { return values_[row * spec_.side() + col]; }
  [[nodiscard]] float at(const CellIndex& c) const { return at(c.row(), c.col()); }

  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] std::span<float> values() { return values_; }

  /// Number of cells with a value strictly above zero.
  [[nodiscard]] std::size_t count_nonzero() const;

  /// Row-major first cell of the maximum value.
  [[nodiscard]] CellIndex argmax() const;

  /// Value-weighted mean cell coordinate; std::nullopt for an all-zero grid.
  [[nodiscard]] std::optional<CellCoord> centroid() const;

  friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;

 private:
  GridSpec spec_;
  std::vector<float> values_;
};

/// Fixed channel order of the intermediate representation.
enum class Channel : std::size_t { kObstacles = 0, kRoad = 1, kLane = 2, kTarget = 3, kOthers = 4 };

inline constexpr std::size_t kChannelCount = 5;
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames{
    "obstacles", "road", "lane", "target", "others"};

/// Parses a channel name; throws std::invalid_argument for unknown names.
[[nodiscard]] Channel channel_from_name(std::string_view name);
[[nodiscard]] std::string_view channel_name(Channel c);

/// Five-channel intermediate representation of one timestep.
struct FrameStack {
  double timestamp_s = 0.0;
  std::array<SemanticGrid, kChannelCount> channels;
  Pose2 ego_pose;

  [[nodiscard]] const SemanticGrid& channel(Channel c) const { return channels[static_cast<std::size_t>(c)]; }
  [[nodiscard]] SemanticGrid& channel(Channel c) { return channels[static_cast<std::size_t>(c)]; }
  [[nodiscard]] const GridSpec& spec() const { return channels[0].spec(); }

  /// Throws std::invalid_argument when channels disagree on their GridSpec.
  void validate() const;

  friend bool operator==(const FrameStack&, const FrameStack&) = default;
};

/// Empty frame with all channels zero.
[[nodiscard]] FrameStack make_empty_frame(const GridSpec& spec, double timestamp_s, const Pose2& ego_pose);

struct RasterResult {
  SemanticGrid grid;
  std::size_t dropped = 0;  ///< points truncated for falling outside the grid
};

/// Marks every cell hit by at least one point. Out-of-bounds points are dropped and counted.
[[nodiscard]] RasterResult rasterize_points(std::span<const MetricPoint> points, const GridSpec& spec);

struct GaussianResult {
  SemanticGrid grid;
  bool out_of_bounds = false;
};

inline constexpr double kGaussianFloor = 1e-4;

/// Unnormalized Gaussian blob, peak 1 at the cell containing `center`, values below 1e-4 zeroed.
/// Throws std::invalid_argument unless sigma_cells > 0.
[[nodiscard]] GaussianResult render_gaussian_target(const MetricPoint& center, double sigma_cells,
                                                    const GridSpec& spec);

/// Same blob centered on an explicit cell.
[[nodiscard]] SemanticGrid render_gaussian_at_cell(const CellIndex& cell, double sigma_cells, const GridSpec& spec);

enum class DownsampleMode { kMaxPool, kAverage };

/// Halves the side length with 2x2 pooling; output resolution doubles.
/// Throws std::invalid_argument for odd sides.
[[nodiscard]] SemanticGrid downsample_half(const SemanticGrid& g, DownsampleMode mode = DownsampleMode::kMaxPool);

/// Doubles the side length by bilinear interpolation with aligned corners; output resolution halves.
[[nodiscard]] SemanticGrid upsample_bilinear_double(const SemanticGrid& g);

/// Repeated downsample_half() until `side` is reached. Throws unless side = g.side() / 2^k.
[[nodiscard]] SemanticGrid downsample_to(const SemanticGrid& g, std::size_t side,
                                         DownsampleMode mode = DownsampleMode::kMaxPool);

/// Repeated upsample_bilinear_double() until `side` is reached. Throws unless side = g.side() * 2^k.
[[nodiscard]] SemanticGrid upsample_to(const SemanticGrid& g, std::size_t side);

/// Every channel passed through downsample_to().
[[nodiscard]] FrameStack downsample_frame(const FrameStack& f, std::size_t side,
                                          DownsampleMode mode = DownsampleMode::kMaxPool);

/// Copy of `f` with the named channel zeroed.
[[nodiscard]] FrameStack zero_channel(const FrameStack& f, Channel channel);
[[nodiscard]] FrameStack zero_channel(const FrameStack& f, std::string_view channel_name);

/// Row reflection (row r <-> side - 1 - r), i.e. X -> -X.
[[nodiscard]] SemanticGrid reflect_rows(const SemanticGrid& g);
[[nodiscard]] FrameStack reflect_rows(const FrameStack& f);

}  // namespace infer::grid

#endif
