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

#include "infer/markov/bayes_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace infer::markov {

namespace {

Belief gaussian_belief(const grid::MetricPoint& center, const grid::GridSpec& spec, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("init_from_observations: sigma_obs_cells must be positive");
  }
  const auto cc = grid::metric_to_cell_coord(center, spec);
  const std::size_t n = spec.side();
  Belief b{spec, std::vector<double>(spec.cell_count(), 0.0)};
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t r = 0; r < n; ++r) {
    const double dr = static_cast<double>(r) + 0.5 - cc.row;
    const double wr = std::exp(-dr * dr * inv);
    if (wr < 1e-300) {
      continue;
    }
    for (std::size_t c = 0; c < n; ++c) {
      const double dc = static_cast<double>(c) + 0.5 - cc.col;
      b.probabilities[r * n + c] = wr * std::exp(-dc * dc * inv);
    }
  }
  const double total = b.total();
  if (!(total > 0.0)) {
    throw std::invalid_argument("init_from_observations: last observation lies too far outside the grid");
  }
  for (auto& p : b.probabilities) {
    p /= total;
  }
  return b;
}

void check_observations(std::span<const grid::MetricPoint> observed) {
  if (observed.size() < 2) {
    throw std::invalid_argument("init_from_observations: need at least two observations, got " +
                                std::to_string(observed.size()));
  }
}

}  // namespace

double Belief::total() const { return std::accumulate(probabilities.begin(), probabilities.end(), 0.0); }

double Belief::max_value() const { return *std::max_element(probabilities.begin(), probabilities.end()); }

grid::CellIndex Belief::argmax() const {
  const auto it = std::max_element(probabilities.begin(), probabilities.end());
  const auto idx = static_cast<std::size_t>(it - probabilities.begin());
  return grid::CellIndex{idx / spec.side(), idx % spec.side(), spec};
}

Belief init_from_observations(std::span<const grid::MetricPoint> observed, const grid::GridSpec& spec,
                              double sigma_obs_cells) {
  check_observations(observed);
  auto b = gaussian_belief(observed.back(), spec, sigma_obs_cells);
  const double steps = static_cast<double>(observed.size() - 1);
  b.vx = (observed.back().x - observed.front().x) / steps / spec.resolution();
  b.vz = (observed.back().z - observed.front().z) / steps / spec.resolution();
  return b;
}

Belief init_from_observations(std::span<const grid::MetricPoint> observed, std::span<const double> timestamps,
                              double step_s, const grid::GridSpec& spec, double sigma_obs_cells) {
  check_observations(observed);
  if (timestamps.size() != observed.size()) {
    throw std::invalid_argument("init_from_observations: timestamps and observations differ in length");
  }
  const double span_s = timestamps.back() - timestamps.front();
  if (!(span_s > 0.0) || !(step_s > 0.0)) {
    throw std::invalid_argument("init_from_observations: timestamps must increase and step_s be positive");
  }
  auto b = gaussian_belief(observed.back(), spec, sigma_obs_cells);
  const double scale = step_s / span_s / spec.resolution();
  b.vx = (observed.back().x - observed.front().x) * scale;
  b.vz = (observed.back().z - observed.front().z) * scale;
  return b;
}

std::vector<double> process_kernel(double sigma_cells) {
  if (!(sigma_cells > 0.0)) {
    return {1.0};
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::max(1.0, std::ceil(3.0 * sigma_cells)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const auto d = static_cast<double>(i);
    k[static_cast<std::size_t>(i + radius)] = std::exp(-d * d / (2.0 * sigma_cells * sigma_cells));
  }
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) {
    v /= sum;
  }
  return k;
}

Belief predict(const Belief& b, double sigma_process_cells) {
  const auto n = static_cast<std::ptrdiff_t>(b.spec.side());
  const double dr = -b.vx;
  const double dc = b.vz;
  const double fr_floor = std::floor(dr);
  const double fc_floor = std::floor(dc);
  const auto ir = static_cast<std::ptrdiff_t>(fr_floor);
  const auto ic = static_cast<std::ptrdiff_t>(fc_floor);
  const double fr = dr - fr_floor;
  const double fc = dc - fc_floor;
  const double w[2][2] = {{(1.0 - fr) * (1.0 - fc), (1.0 - fr) * fc}, {fr * (1.0 - fc), fr * fc}};

  std::vector<double> shifted(b.probabilities.size(), 0.0);
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      const double m = b.probabilities[static_cast<std::size_t>(r * n + c)];
      if (m == 0.0) {
        continue;
      }
      for (int a = 0; a < 2; ++a) {
        const std::ptrdiff_t tr = r + ir + a;
        if (tr < 0 || tr >= n) {
          continue;
        }
        for (int e = 0; e < 2; ++e) {
          const std::ptrdiff_t tc = c + ic + e;
          if (tc >= 0 && tc < n) {
            shifted[static_cast<std::size_t>(tr * n + tc)] += m * w[a][e];
          }
        }
      }
    }
  }

  const auto kernel = process_kernel(sigma_process_cells);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  if (radius > 0) {
    std::vector<double> tmp(shifted.size(), 0.0);
    for (std::ptrdiff_t r = 0; r < n; ++r) {
      for (std::ptrdiff_t c = 0; c < n; ++c) {
        const double m = shifted[static_cast<std::size_t>(r * n + c)];
        if (m == 0.0) {
          continue;
        }
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          const std::ptrdiff_t tc = c + k;
          if (tc >= 0 && tc < n) {
            tmp[static_cast<std::size_t>(r * n + tc)] += m * kernel[static_cast<std::size_t>(k + radius)];
          }
        }
      }
    }
    std::fill(shifted.begin(), shifted.end(), 0.0);
    for (std::ptrdiff_t r = 0; r < n; ++r) {
      for (std::ptrdiff_t c = 0; c < n; ++c) {
        const double m = tmp[static_cast<std::size_t>(r * n + c)];
        if (m == 0.0) {
          continue;
        }
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          const std::ptrdiff_t tr = r + k;
          if (tr >= 0 && tr < n) {
            shifted[static_cast<std::size_t>(tr * n + c)] += m * kernel[static_cast<std::size_t>(k + radius)];
          }
        }
      }
    }
  }

  const double total = std::accumulate(shifted.begin(), shifted.end(), 0.0);
  if (!(total > 0.0)) {
    throw BeliefLost("predict: all probability mass left the grid");
  }
  for (auto& p : shifted) {
    p /= total;
  }
  return Belief{b.spec, std::move(shifted), b.vx, b.vz};
}

namespace {

BaselineResult roll(Belief b, std::size_t horizon, const FilterConfig& cfg) {
  BaselineResult out;
  out.positions.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    if (!out.belief_lost) {
      try {
        b = predict(b, cfg.sigma_process_cells);
      } catch (const BeliefLost&) {
        out.belief_lost = true;
      }
    }
    out.positions.push_back(grid::cell_to_metric(b.argmax(), b.spec));
  }
  return out;
}

}  // namespace

BaselineResult run_baseline(std::span<const grid::MetricPoint> past, const grid::GridSpec& spec, std::size_t horizon,
                            const FilterConfig& cfg) {
  return roll(init_from_observations(past, spec, cfg.sigma_obs_cells), horizon, cfg);
}

BaselineResult run_baseline(std::span<const grid::MetricPoint> past, std::span<const double> timestamps,
                            double step_s, const grid::GridSpec& spec, std::size_t horizon, const FilterConfig& cfg) {
  return roll(init_from_observations(past, timestamps, step_s, spec, cfg.sigma_obs_cells), horizon, cfg);
}

}  // namespace infer::markov
