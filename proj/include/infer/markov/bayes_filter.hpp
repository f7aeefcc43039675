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

#ifndef INFER_MARKOV_BAYES_FILTER_HPP
#define INFER_MARKOV_BAYES_FILTER_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "infer/gridcore/grid.hpp"

/**
 * \file
 * \brief Discrete Bayes filter over the occupancy grid with a constant-velocity
 * motion model: the grid-world baseline for vehicle forecasting.
 */

namespace infer::markov {

/// Normalized probability grid plus the velocity the motion model applies each step.
struct Belief {
  grid::GridSpec spec;
  std::vector<double> probabilities;  ///< row-major, sums to 1
  double vx = 0.0;                    ///< lateral velocity, cells per frame (toward row 0)
  double vz = 0.0;                    ///< forward velocity, cells per frame (toward higher columns)

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return probabilities[row * spec.side() + col]; }
  [[nodiscard]] double total() const;
  [[nodiscard]] double max_value() const;
  /// Most probable cell, first in row-major order on ties.
  [[nodiscard]] grid::CellIndex argmax() const;
};

struct FilterConfig {
  double sigma_obs_cells = 1.0;
  double sigma_process_cells = 0.5;
};

/// Raised by predict() when every bit of probability has left the grid.
class BeliefLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Belief from at least two sensor-frame observations one frame apart: a normalized
 * Gaussian of width sigma_obs_cells centered on the exact last position, with the
 * mean per-frame displacement as velocity. Throws std::invalid_argument otherwise.
 */
[[nodiscard]] Belief init_from_observations(std::span<const grid::MetricPoint> observed, const grid::GridSpec& spec,
                                            double sigma_obs_cells = 1.0);

/// As above for irregularly timed observations; the velocity is scaled to one `step_s` per predict().
[[nodiscard]] Belief init_from_observations(std::span<const grid::MetricPoint> observed,
                                            std::span<const double> timestamps, double step_s,
                                            const grid::GridSpec& spec, double sigma_obs_cells = 1.0);

/**
 * One prediction step: bilinear sub-cell shift by the velocity, isotropic Gaussian
 * blur (kernel radius ceil(3 sigma), zero padding; sigma <= 0 skips the blur), then
 * renormalization of the mass that stayed on the grid.
 */
[[nodiscard]] Belief predict(const Belief& b, double sigma_process_cells = 0.5);

/// Normalized 1-D blur kernel used by predict(); index i holds offset i - radius.
[[nodiscard]] std::vector<double> process_kernel(double sigma_cells);

struct BaselineResult {
  std::vector<grid::MetricPoint> positions;  ///< argmax cell centers, one per step
  bool belief_lost = false;                  ///< remaining steps repeat the last position
};

/// init_from_observations() then `horizon` predict() steps.
[[nodiscard]] BaselineResult run_baseline(std::span<const grid::MetricPoint> past, const grid::GridSpec& spec,
                                          std::size_t horizon, const FilterConfig& cfg = {});

/// Timestamped variant; each step advances by `step_s` seconds.
[[nodiscard]] BaselineResult run_baseline(std::span<const grid::MetricPoint> past, std::span<const double> timestamps,
                                          double step_s, const grid::GridSpec& spec, std::size_t horizon,
                                          const FilterConfig& cfg = {});

}  // namespace infer::markov

#endif
