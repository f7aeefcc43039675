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

#ifndef INFER_FORECASTER_TOPK_HPP
#define INFER_FORECASTER_TOPK_HPP

#include <vector>

#include "infer/gridcore/grid.hpp"

namespace infer::forecast {

inline constexpr double kDefaultNmsRadiusCells = 2.0;

struct ScoredPosition {
  grid::MetricPoint position;  ///< center of the selected cell
  std::size_t row = 0;
  std::size_t col = 0;
  float score = 0.0F;
};

struct TopK {
  std::vector<ScoredPosition> hypotheses;  ///< descending score
  bool truncated = false;                  ///< fewer than K candidates survived
};

/**
 * Greedy non-maximum suppression over the positive cells of `heatmap`: cells are
 * visited by descending value (row-major on ties) and a cell is kept unless it lies
 * within `nms_radius_cells` (Euclidean) of one already kept. Throws
 * std::invalid_argument for k == 0.
 */
[[nodiscard]] TopK topk_positions(const grid::SemanticGrid& heatmap, std::size_t k,
                                  double nms_radius_cells = kDefaultNmsRadiusCells);

}  // namespace infer::forecast

#endif
