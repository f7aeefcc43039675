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


#ifndef INFER_EVALKIT_METRICS_HPP
#define INFER_EVALKIT_METRICS_HPP

#include <span>
#include <string>
#include <vector>

#include "infer/gridcore/grid.hpp"

/**
 * \file
 * \brief Displacement metrics, multi-horizon tables, error histograms and
 * nearest-neighbour association. All positions are world-frame points.
 */

namespace infer::eval {

using grid::WorldPoint;

/// Euclidean distances between aligned sequences; throws std::invalid_argument on a length mismatch.
[[nodiscard]] std::vector<double> step_errors(std::span<const WorldPoint> pred, std::span<const WorldPoint> gt);

/// Mean of step_errors(); throws std::invalid_argument on a length mismatch or empty input.
[[nodiscard]] double ade(std::span<const WorldPoint> pred, std::span<const WorldPoint> gt);

enum class BestOfK {
  kPerStep,        ///< minimum over hypotheses at every step, then the mean
  kTrajectoryMin,  ///< ADE of the single best complete hypothesis sequence
};

/**
 * Per-step minimum distances over K hypothesis sequences (`pred_k[j][i]` is
 * hypothesis j at step i). Throws std::invalid_argument for an empty set or
 * length mismatches.
 */
[[nodiscard]] std::vector<double> best_of_k_errors(std::span<const std::vector<WorldPoint>> pred_k,
                                                   std::span<const WorldPoint> gt);

[[nodiscard]] double best_of_k_ade(std::span<const std::vector<WorldPoint>> pred_k, std::span<const WorldPoint> gt,
                                   BestOfK mode = BestOfK::kPerStep);

/// Errors of one evaluated trajectory; `times_s[i]` is the time of step i after the start of prediction.
struct TrajectoryErrors {
  std::string id;
  std::vector<double> times_s;
  std::vector<double> errors;
};

struct HorizonColumn {
  double horizon_s = 0.0;
  std::size_t samples = 0;  ///< pooled step count
  double ade_m = 0.0;
};

struct HorizonTable {
  std::vector<HorizonColumn> columns;
  std::vector<std::string> notes;  ///< one per skipped horizon
};

/**
 * Cumulative ADE: the column for horizon t pools every step with time <= t over
 * all trajectories. A horizon is skipped, with a note, when some trajectory does
 * not reach it.
 */
[[nodiscard]] HorizonTable horizon_table(std::span<const TrajectoryErrors> results, std::span<const double> horizons_s);

/// Uniformly timed steps at `frame_rate_hz`: step i happens (i + 1) / frame_rate_hz after the start.
[[nodiscard]] std::vector<double> uniform_step_times(std::size_t steps, double frame_rate_hz);

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  ///< bin b covers [b w, (b + 1) w)
  std::size_t total = 0;
  double threshold = 0.0;
  double fraction_within = 0.0;  ///< share of errors <= threshold; 0 when empty
};

/// Throws std::invalid_argument unless bin_width > 0.
[[nodiscard]] Histogram error_histogram(std::span<const double> errors, double bin_width, double threshold);

struct Association {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Nearest detection, lowest index on ties. Throws std::invalid_argument when `detections` is empty.
[[nodiscard]] Association associate(const WorldPoint& predicted, std::span<const WorldPoint> detections);

}  // namespace infer::eval

#endif
