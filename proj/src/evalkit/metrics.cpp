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


#include "infer/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace infer::eval {

namespace {

constexpr double kTimeSlack = 1e-9;

double distance(const WorldPoint& a, const WorldPoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double mean(std::span<const double> v) {
  if (v.empty()) {
    throw std::invalid_argument("mean of an empty sequence");
  }
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> step_errors(std::span<const WorldPoint> pred, std::span<const WorldPoint> gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("trajectory length mismatch: " + std::to_string(pred.size()) + " predicted vs " +
                                std::to_string(gt.size()) + " ground-truth steps");
  }
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out[i] = distance(pred[i], gt[i]);
  }
  return out;
}

double ade(std::span<const WorldPoint> pred, std::span<const WorldPoint> gt) { return mean(step_errors(pred, gt)); }

std::vector<double> best_of_k_errors(std::span<const std::vector<WorldPoint>> pred_k, std::span<const WorldPoint> gt) {
  if (pred_k.empty()) {
    throw std::invalid_argument("best-of-K needs at least one hypothesis");
  }
  std::vector<double> best = step_errors(pred_k.front(), gt);
  for (std::size_t j = 1; j < pred_k.size(); ++j) {
    const auto e = step_errors(pred_k[j], gt);
    for (std::size_t i = 0; i < e.size(); ++i) {
      best[i] = std::min(best[i], e[i]);
    }
  }
  return best;
}

double best_of_k_ade(std::span<const std::vector<WorldPoint>> pred_k, std::span<const WorldPoint> gt, BestOfK mode) {
  if (mode == BestOfK::kPerStep) {
    return mean(best_of_k_errors(pred_k, gt));
  }
  if (pred_k.empty()) {
    throw std::invalid_argument("best-of-K needs at least one hypothesis");
  }
  double best = ade(pred_k.front(), gt);
  for (std::size_t j = 1; j < pred_k.size(); ++j) {
    best = std::min(best, ade(pred_k[j], gt));
  }
  return best;
}

HorizonTable horizon_table(std::span<const TrajectoryErrors> results, std::span<const double> horizons_s) {
  for (const auto& r : results) {
    if (r.times_s.size() != r.errors.size()) {
      throw std::invalid_argument("trajectory '" + r.id + "': times and errors differ in length");
    }
  }
  HorizonTable table;
  for (const double h : horizons_s) {
    const auto short_one = std::find_if(results.begin(), results.end(), [&](const TrajectoryErrors& r) {
      return r.times_s.empty() || r.times_s.back() < h - kTimeSlack;
    });
    if (results.empty() || short_one != results.end()) {
      std::ostringstream note;
      note << "horizon " << h << " s skipped: ";
      if (results.empty()) {
        note << "no trajectories";
      } else {
        note << "trajectory '" << short_one->id << "' ends at "
             << (short_one->times_s.empty() ? 0.0 : short_one->times_s.back()) << " s";
      }
      table.notes.push_back(note.str());
      continue;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
      for (std::size_t i = 0; i < r.errors.size() && r.times_s[i] <= h + kTimeSlack; ++i) {
        sum += r.errors[i];
        ++n;
      }
    }
    table.columns.push_back({h, n, n == 0 ? 0.0 : sum / static_cast<double>(n)});
  }
  return table;
}

std::vector<double> uniform_step_times(std::size_t steps, double frame_rate_hz) {
  if (!(frame_rate_hz > 0.0)) {
    throw std::invalid_argument("frame rate must be positive");
  }
  std::vector<double> t(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    t[i] = static_cast<double>(i + 1) / frame_rate_hz;
  }
  return t;
}

Histogram error_histogram(std::span<const double> errors, double bin_width, double threshold) {
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("histogram bin width must be positive");
  }
  Histogram h;
  h.bin_width = bin_width;
  h.threshold = threshold;
  h.total = errors.size();
  std::size_t within = 0;
  for (const double e : errors) {
    const auto bin = static_cast<std::size_t>(std::floor(std::max(e, 0.0) / bin_width));
    if (bin >= h.counts.size()) {
      h.counts.resize(bin + 1, 0);
    }
    ++h.counts[bin];
    within += e <= threshold ? 1 : 0;
  }
  h.fraction_within = errors.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(errors.size());
  return h;
}

Association associate(const WorldPoint& predicted, std::span<const WorldPoint> detections) {
  if (detections.empty()) {
    throw std::invalid_argument("associate: no detections");
  }
  Association best{0, distance(predicted, detections.front())};
  for (std::size_t i = 1; i < detections.size(); ++i) {
    const double d = distance(predicted, detections[i]);
    if (d < best.distance) {
      best = {i, d};
    }
  }
  return best;
}

}  // namespace infer::eval
