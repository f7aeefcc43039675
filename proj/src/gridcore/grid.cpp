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

#include "infer/gridcore/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace infer::grid {

MetricPoint to_sensor_frame(const Pose2& sensor, const WorldPoint& p) {
  const double dx = p.x - sensor.x;
  const double dy = p.y - sensor.y;
  const double c = std::cos(sensor.heading);
  const double s = std::sin(sensor.heading);
  // forward = (c, s), right = (s, -c)
  return MetricPoint{dx * s - dy * c, dx * c + dy * s};
}

WorldPoint to_world_frame(const Pose2& sensor, const MetricPoint& p) {
  const double c = std::cos(sensor.heading);
  const double s = std::sin(sensor.heading);
  return WorldPoint{sensor.x + p.z * c + p.x * s, sensor.y + p.z * s - p.x * c};
}

GridSpec::GridSpec(std::size_t side, double resolution_m) : side_(side), resolution_(resolution_m) {
  if (side == 0) {
    throw std::invalid_argument("GridSpec: side must be positive");
  }
  if (!(resolution_m > 0.0) || !std::isfinite(resolution_m)) {
    throw std::invalid_argument("GridSpec: resolution must be positive and finite");
  }
}

CellIndex::CellIndex(std::size_t row, std::size_t col, const GridSpec& spec) : row_(row), col_(col) {
  if (row >= spec.side() || col >= spec.side()) {
    throw std::out_of_range("CellIndex (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside grid of side " + std::to_string(spec.side()));
  }
}

CellCoord metric_to_cell_coord(const MetricPoint& p, const GridSpec& spec) {
  const double half = static_cast<double>(spec.side() / 2);
  return CellCoord{half - p.x / spec.resolution(), p.z / spec.resolution()};
}

MetricPoint cell_coord_to_metric(const CellCoord& c, const GridSpec& spec) {
  const double half = static_cast<double>(spec.side() / 2);
  return MetricPoint{(half - c.row) * spec.resolution(), c.col * spec.resolution()};
}

std::optional<CellIndex> metric_to_cell(const MetricPoint& p, const GridSpec& spec) {
  if (!std::isfinite(p.x) || !std::isfinite(p.z)) {
    return std::nullopt;
  }
  const double col = std::floor(p.z / spec.resolution());
  const double row = static_cast<double>(spec.side() / 2) - 1.0 - std::floor(p.x / spec.resolution());
  const double side = static_cast<double>(spec.side());
  if (row < 0.0 || col < 0.0 || row >= side || col >= side) {
    return std::nullopt;
  }
  return CellIndex{static_cast<std::size_t>(row), static_cast<std::size_t>(col), spec};
}

MetricPoint cell_to_metric(const CellIndex& c, const GridSpec& spec) {
  if (c.row() >= spec.side() || c.col() >= spec.side()) {
    throw std::out_of_range("cell_to_metric: cell outside grid");
  }
  return cell_coord_to_metric(
      CellCoord{static_cast<double>(c.row()) + 0.5, static_cast<double>(c.col()) + 0.5}, spec);
}

SemanticGrid::SemanticGrid(const GridSpec& spec, std::vector<float> values) : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.cell_count()) {
    throw std::invalid_argument("SemanticGrid: expected " + std::to_string(spec_.cell_count()) + " values, got " +
                                std::to_string(values_.size()));
  }
  for (const float v : values_) {
    if (!(v >= 0.0F && v <= 1.0F)) {
      throw std::invalid_argument("SemanticGrid: value outside [0, 1]");
    }
  }
}

std::size_t SemanticGrid::count_nonzero() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](float v) { return v > 0.0F; }));
}

CellIndex SemanticGrid::argmax() const {
  const auto it = std::max_element(values_.begin(), values_.end());
  const auto idx = static_cast<std::size_t>(std::distance(values_.begin(), it));
  return CellIndex{idx / spec_.side(), idx % spec_.side(), spec_};
}

std::optional<CellCoord> SemanticGrid::centroid() const {
  double total = 0.0;
  double row_sum = 0.0;
  double col_sum = 0.0;
  const std::size_t side = spec_.side();
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double v = values_[r * side + c];
      total += v;
      row_sum += v * (static_cast<double>(r) + 0.5);
      col_sum += v * (static_cast<double>(c) + 0.5);
    }
  }
  if (total <= 0.0) {
    return std::nullopt;
  }
  return CellCoord{row_sum / total, col_sum / total};
}

Channel channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kChannelNames[i] == name) {
      return static_cast<Channel>(i);
    }
  }
  throw std::invalid_argument("unknown channel name '" + std::string(name) +
                              "' (expected obstacles, road, lane, target or others)");
}

std::string_view channel_name(Channel c) { return kChannelNames.at(static_cast<std::size_t>(c)); }

void FrameStack::validate() const {
  for (const auto& ch : channels) {
    if (ch.spec() != channels[0].spec()) {
      throw std::invalid_argument("FrameStack: channels disagree on grid spec");
    }
    if (ch.values().size() != ch.spec().cell_count()) {
      throw std::invalid_argument("FrameStack: channel raster size does not match its spec");
    }
  }
}

FrameStack make_empty_frame(const GridSpec& spec, double timestamp_s, const Pose2& ego_pose) {
  FrameStack f;
  f.timestamp_s = timestamp_s;
  f.ego_pose = ego_pose;
  for (auto& ch : f.channels) {
    ch = SemanticGrid{spec};
  }
  return f;
}

RasterResult rasterize_points(std::span<const MetricPoint> points, const GridSpec& spec) {
  RasterResult out{SemanticGrid{spec}, 0};
  for (const auto& p : points) {
    if (const auto cell = metric_to_cell(p, spec)) {
      out.grid.at(cell->row(), cell->col()) = 1.0F;
    } else {
      ++out.dropped;
    }
  }
  return out;
}

SemanticGrid render_gaussian_at_cell(const CellIndex& cell, double sigma_cells, const GridSpec& spec) {
  if (!(sigma_cells > 0.0)) {
    throw std::invalid_argument("render_gaussian_target: sigma must be positive");
  }
  SemanticGrid g{spec};
  const double inv = 1.0 / (2.0 * sigma_cells * sigma_cells);
  // exp(-d^2 inv) < floor  <=>  d > sqrt(-ln(floor) / inv)
  const double reach = std::sqrt(-std::log(kGaussianFloor) / inv);
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(reach));
  const auto side = static_cast<std::ptrdiff_t>(spec.side());
  const auto r0 = static_cast<std::ptrdiff_t>(cell.row());
  const auto c0 = static_cast<std::ptrdiff_t>(cell.col());
  for (std::ptrdiff_t r = std::max<std::ptrdiff_t>(0, r0 - radius); r <= std::min(side - 1, r0 + radius); ++r) {
    for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, c0 - radius); c <= std::min(side - 1, c0 + radius); ++c) {
      const double d2 = static_cast<double>((r - r0) * (r - r0) + (c - c0) * (c - c0));
      const double v = std::exp(-d2 * inv);
      if (v >= kGaussianFloor) {
        g.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(v);
      }
    }
  }
  return g;
}

GaussianResult render_gaussian_target(const MetricPoint& center, double sigma_cells, const GridSpec& spec) {
  if (!(sigma_cells > 0.0)) {
    throw std::invalid_argument("render_gaussian_target: sigma must be positive");
  }
  const auto cell = metric_to_cell(center, spec);
  if (!cell) {
    return GaussianResult{SemanticGrid{spec}, true};
  }
  return GaussianResult{render_gaussian_at_cell(*cell, sigma_cells, spec), false};
}

SemanticGrid downsample_half(const SemanticGrid& g, DownsampleMode mode) {
  const std::size_t side = g.side();
  if (side % 2 != 0) {
    throw std::invalid_argument("downsample_half: odd side " + std::to_string(side));
  }
  const std::size_t half = side / 2;
  SemanticGrid out{GridSpec{half, g.spec().resolution() * 2.0}};
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      const float a = g.at(2 * r, 2 * c);
      const float b = g.at(2 * r, 2 * c + 1);
      const float d = g.at(2 * r + 1, 2 * c);
      const float e = g.at(2 * r + 1, 2 * c + 1);
      out.at(r, c) = mode == DownsampleMode::kMaxPool ? std::max(std::max(a, b), std::max(d, e))
                                                      : (a + b + d + e) * 0.25F;
    }
  }
  return out;
}

SemanticGrid upsample_bilinear_double(const SemanticGrid& g) {
  const std::size_t in = g.side();
  const std::size_t out_side = in * 2;
  SemanticGrid out{GridSpec{out_side, g.spec().resolution() * 0.5}};
  // aligned corners: output index o samples input coordinate o * (in - 1) / (out - 1)
  const double scale = in > 1 ? static_cast<double>(in - 1) / static_cast<double>(out_side - 1) : 0.0;
  std::vector<std::size_t> lo(out_side);
  std::vector<double> frac(out_side);
  for (std::size_t o = 0; o < out_side; ++o) {
    const double pos = static_cast<double>(o) * scale;
    const auto l = std::min(static_cast<std::size_t>(pos), in - 1);
    lo[o] = l;
    frac[o] = pos - static_cast<double>(l);
  }
  for (std::size_t r = 0; r < out_side; ++r) {
    const std::size_t r0 = lo[r];
    const std::size_t r1 = std::min(r0 + 1, in - 1);
    const double fr = frac[r];
    for (std::size_t c = 0; c < out_side; ++c) {
      const std::size_t c0 = lo[c];
      const std::size_t c1 = std::min(c0 + 1, in - 1);
      const double fc = frac[c];
      const double top = g.at(r0, c0) * (1.0 - fc) + g.at(r0, c1) * fc;
      const double bottom = g.at(r1, c0) * (1.0 - fc) + g.at(r1, c1) * fc;
      out.at(r, c) = static_cast<float>(std::clamp(top * (1.0 - fr) + bottom * fr, 0.0, 1.0));
    }
  }
  return out;
}

namespace {

std::size_t halvings_between(std::size_t big, std::size_t small) {
  if (small == 0) {
    throw std::invalid_argument("resize: target side must be positive");
  }
  std::size_t steps = 0;
  std::size_t s = big;
  while (s > small) {
    if (s % 2 != 0) {
      break;
    }
    s /= 2;
    ++steps;
  }
  if (s != small) {
    throw std::invalid_argument("resize: side " + std::to_string(small) + " is not " + std::to_string(big) +
                                " divided by a power of two");
  }
  return steps;
}

}  // namespace

SemanticGrid downsample_to(const SemanticGrid& g, std::size_t side, DownsampleMode mode) {
  const std::size_t steps = halvings_between(g.side(), side);
  SemanticGrid out = g;
  for (std::size_t i = 0; i < steps; ++i) {
    out = downsample_half(out, mode);
  }
  return out;
}

SemanticGrid upsample_to(const SemanticGrid& g, std::size_t side) {
  const std::size_t steps = halvings_between(side, g.side());
  SemanticGrid out = g;
  for (std::size_t i = 0; i < steps; ++i) {
    out = upsample_bilinear_double(out);
  }
  return out;
}

FrameStack downsample_frame(const FrameStack& f, std::size_t side, DownsampleMode mode) {
  FrameStack out;
  out.timestamp_s = f.timestamp_s;
  out.ego_pose = f.ego_pose;
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    out.channels[i] = downsample_to(f.channels[i], side, mode);
  }
  return out;
}

FrameStack zero_channel(const FrameStack& f, Channel channel) {
  FrameStack out = f;
  auto& ch = out.channel(channel);
  std::fill(ch.values().begin(), ch.values().end(), 0.0F);
  return out;
}

FrameStack zero_channel(const FrameStack& f, std::string_view channel_name) {
  return zero_channel(f, channel_from_name(channel_name));
}

SemanticGrid reflect_rows(const SemanticGrid& g) {
  SemanticGrid out{g.spec()};
  const std::size_t side = g.side();
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      out.at(side - 1 - r, c) = g.at(r, c);
    }
  }
  return out;
}

FrameStack reflect_rows(const FrameStack& f) {
  FrameStack out = f;
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    out.channels[i] = reflect_rows(f.channels[i]);
  }
  out.ego_pose.y = -f.ego_pose.y;
  out.ego_pose.heading = -f.ego_pose.heading;
  return out;
}

}  // namespace infer::grid
