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


#include "infer/evalkit/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace infer::eval {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kBackground{24, 24, 24};
constexpr Rgb kRoad{90, 90, 90};
constexpr Rgb kLane{220, 220, 220};
constexpr Rgb kObstacle{150, 90, 40};
constexpr Rgb kOthers{90, 90, 200};
constexpr Rgb kObserved{60, 140, 255};
constexpr Rgb kTruth{40, 220, 70};
constexpr Rgb kPredicted{240, 50, 50};

std::string hex(const Rgb& c) {
  std::ostringstream os;
  os << '#' << std::hex << std::setfill('0');
  for (const auto v : c) {
    os << std::setw(2) << static_cast<int>(v);
  }
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& header, const std::uint8_t* data,
                 std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  out << header;
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) {
    throw std::runtime_error("failed writing '" + path.string() + "'");
  }
}

/// Background color of one cell; later layers win.
Rgb cell_color(const grid::FrameStack& f, std::size_t r, std::size_t c) {
  Rgb color = kBackground;
  if (f.channel(grid::Channel::kRoad).at(r, c) > 0.5F) {
    color = kRoad;
  }
  if (f.channel(grid::Channel::kLane).at(r, c) > 0.5F) {
    color = kLane;
  }
  if (f.channel(grid::Channel::kObstacles).at(r, c) > 0.5F) {
    color = kObstacle;
  }
  if (f.channel(grid::Channel::kOthers).at(r, c) > 0.5F) {
    color = kOthers;
  }
  return color;
}

grid::CellCoord to_cell(const grid::FrameStack& f, const WorldPoint& p) {
  return grid::metric_to_cell_coord(grid::to_sensor_frame(f.ego_pose, p), f.spec());
}

void draw_disc(Image& img, double cx, double cy, double radius, const Rgb& c) {
  const auto lo_x = static_cast<long>(std::floor(cx - radius));
  const auto hi_x = static_cast<long>(std::ceil(cx + radius));
  const auto lo_y = static_cast<long>(std::floor(cy - radius));
  const auto hi_y = static_cast<long>(std::ceil(cy + radius));
  for (long y = lo_y; y <= hi_y; ++y) {
    for (long x = lo_x; x <= hi_x; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double dy = static_cast<double>(y) + 0.5 - cy;
      if (x >= 0 && y >= 0 && dx * dx + dy * dy <= radius * radius) {
        img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c[0], c[1], c[2]);
      }
    }
  }
}

void draw_track(Image& img, const grid::FrameStack& f, std::span<const WorldPoint> pts, double scale, const Rgb& c) {
  const double radius = std::max(1.0, 0.35 * scale);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto a = to_cell(f, pts[i]);
    draw_disc(img, a.col * scale, a.row * scale, radius, c);
    if (i + 1 < pts.size()) {
      const auto b = to_cell(f, pts[i + 1]);
      const double len = std::hypot(b.col - a.col, b.row - a.row) * scale;
      const auto n = static_cast<std::size_t>(std::ceil(len));
      for (std::size_t s = 1; s < n; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(n);
        draw_disc(img, (a.col + t * (b.col - a.col)) * scale, (a.row + t * (b.row - a.row)) * scale, 0.5 * radius, c);
      }
    }
  }
}

std::string svg_polyline(const grid::FrameStack& f, std::span<const WorldPoint> pts, const Rgb& c) {
  if (pts.empty()) {
    return {};
  }
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << hex(c) << "\" stroke-width=\"0.4\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto p = to_cell(f, pts[i]);
    os << (i ? " " : "") << num(p.col) << ',' << num(p.row);
  }
  os << "\"/>\n";
  for (const auto& w : pts) {
    const auto p = to_cell(f, w);
    os << "<circle cx=\"" << num(p.col) << "\" cy=\"" << num(p.row) << "\" r=\"0.6\" fill=\"" << hex(c) << "\"/>\n";
  }
  return os.str();
}

}  // namespace

void Image::set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x >= width || y >= height) {
    return;
  }
  auto* p = &rgb[(y * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  write_bytes(path, "P6\n" + std::to_string(image.width) + ' ' + std::to_string(image.height) + "\n255\n",
              image.rgb.data(), image.rgb.size());
}

void write_pgm(const std::filesystem::path& path, const grid::SemanticGrid& grid) {
  std::vector<std::uint8_t> px(grid.values().size());
  std::transform(grid.values().begin(), grid.values().end(), px.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(static_cast<double>(v), 0.0, 1.0)));
  });
  write_bytes(path, "P5\n" + std::to_string(grid.side()) + ' ' + std::to_string(grid.side()) + "\n255\n", px.data(),
              px.size());
}

Image render_overlay(const grid::FrameStack& frame, const OverlayTracks& tracks, std::size_t scale) {
  if (scale == 0) {
    throw std::invalid_argument("overlay scale must be positive");
  }
  const std::size_t side = frame.spec().side();
  Image img(side * scale, side * scale);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const auto color = cell_color(frame, r, c);
      for (std::size_t y = r * scale; y < (r + 1) * scale; ++y) {
        for (std::size_t x = c * scale; x < (c + 1) * scale; ++x) {
          img.set(x, y, color[0], color[1], color[2]);
        }
      }
    }
  }
  const auto s = static_cast<double>(scale);
  draw_track(img, frame, tracks.observed, s, kObserved);
  draw_track(img, frame, tracks.truth, s, kTruth);
  draw_track(img, frame, tracks.predicted, s, kPredicted);
  return img;
}

std::string overlay_svg(const grid::FrameStack& frame, const OverlayTracks& tracks) {
  const std::size_t side = frame.spec().side();
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << side << ' ' << side << "\" width=\"" << 4 * side
     << "\" height=\"" << 4 * side << "\">\n";
  os << "<rect width=\"" << side << "\" height=\"" << side << "\" fill=\"" << hex(kBackground) << "\"/>\n";
  for (std::size_t r = 0; r < side; ++r) {
    std::size_t c = 0;
    while (c < side) {
      const auto color = cell_color(frame, r, c);
      std::size_t end = c + 1;
      while (end < side && cell_color(frame, r, end) == color) {
        ++end;
      }
      if (color != kBackground) {
        os << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"" << end - c << "\" height=\"1\" fill=\"" << hex(color)
           << "\"/>\n";
      }
      c = end;
    }
  }
  os << svg_polyline(frame, tracks.observed, kObserved);
  os << svg_polyline(frame, tracks.truth, kTruth);
  os << svg_polyline(frame, tracks.predicted, kPredicted);
  os << "</svg>\n";
  return os.str();
}

std::string histogram_svg(const Histogram& h) {
  constexpr double kWidth = 480.0;
  constexpr double kHeight = 240.0;
  constexpr double kMargin = 30.0;
  const std::size_t bins = std::max<std::size_t>(h.counts.size(), 1);
  const std::size_t peak = h.counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  const double bar = (kWidth - 2 * kMargin) / static_cast<double>(bins);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double height = (kHeight - 2 * kMargin) * static_cast<double>(h.counts[b]) / static_cast<double>(peak);
    os << "<rect x=\"" << num(kMargin + static_cast<double>(b) * bar) << "\" y=\""
       << num(kHeight - kMargin - height) << "\" width=\"" << num(0.9 * bar) << "\" height=\"" << num(height)
       << "\" fill=\"#4060c0\"/>\n";
  }
  const double th_x = kMargin + h.threshold / h.bin_width * bar;
  os << "<line x1=\"" << num(th_x) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(th_x) << "\" y2=\""
     << num(kHeight - kMargin) << "\" stroke=\"#c03030\" stroke-dasharray=\"4 3\"/>\n";
  os << "<text x=\"" << num(kMargin) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">L2 error (m), bin "
     << h.bin_width << " m; " << num(100.0 * h.fraction_within) << "% within " << h.threshold << " m</text>\n";
  os << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kHeight - 10) << "\" font-family=\"sans-serif\" "
     << "font-size=\"11\">0</text>\n";
  os << "<text x=\"" << num(kWidth - kMargin - 30) << "\" y=\"" << num(kHeight - 10)
     << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(static_cast<double>(bins) * h.bin_width)
     << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace infer::eval
