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

#include "infer/forecaster/topk.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace infer::forecast {

TopK topk_positions(const grid::SemanticGrid& heatmap, std::size_t k, double nms_radius_cells) {
  if (k == 0) {
    throw std::invalid_argument("topk_positions: K must be at least 1");
  }
  const auto values = heatmap.values();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0F) {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  const std::size_t side = heatmap.side();
  const double r2 = nms_radius_cells * nms_radius_cells;
  TopK out;
  for (const auto idx : order) {
    const std::size_t row = idx / side;
    const std::size_t col = idx % side;
    const bool suppressed = std::any_of(out.hypotheses.begin(), out.hypotheses.end(), [&](const ScoredPosition& h) {
      const double dr = static_cast<double>(h.row) - static_cast<double>(row);
      const double dc = static_cast<double>(h.col) - static_cast<double>(col);
      return dr * dr + dc * dc <= r2;
    });
    if (suppressed) {
      continue;
    }
    out.hypotheses.push_back(
        {grid::cell_to_metric(grid::CellIndex{row, col, heatmap.spec()}, heatmap.spec()), row, col, values[idx]});
    if (out.hypotheses.size() == k) {
      break;
    }
  }
  out.truncated = out.hypotheses.size() < k;
  return out;
}

}  // namespace infer::forecast
