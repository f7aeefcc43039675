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

#ifndef INFER_FORECASTER_ROLLOUT_HPP
#define INFER_FORECASTER_ROLLOUT_HPP

#include <span>
#include <vector>

#include "infer/forecaster/model.hpp"
#include "infer/forecaster/topk.hpp"
#include "infer/gridcore/grid.hpp"
#include "infer/synthgen/render.hpp"

namespace infer::forecast {

/**
 * Input for the next step built from a prediction: the target channel becomes a
 * Gaussian blob at the heatmap argmax, static channels come from `prior`, and the
 * others channel is carried over from `prev`. Throws std::invalid_argument when
 * the prior or heatmap does not match the grid of `prev`.
 */
[[nodiscard]] grid::FrameStack construct_next_input(const grid::FrameStack& prev, const grid::SemanticGrid& heatmap,
                                                    const synth::StaticChannels& prior, double sigma_cells);

/// Recurrent state after feeding `frames` from a zero state, without recording gradients.
template <typename T>
[[nodiscard]] ForecastState<T> precondition(const Model<T>& model, std::span<const grid::FrameStack> frames);

struct RolloutOptions {
  std::size_t output_side = 0;  ///< heatmaps are upsampled to this side before extraction; 0 keeps model side
  std::size_t top_k = 1;
  double nms_radius_cells = kDefaultNmsRadiusCells;
};

struct RolloutResult {
  std::size_t start_frame = 0;                 ///< index of the first predicted frame
  std::vector<grid::SemanticGrid> heatmaps;    ///< model-side, one per predicted frame
  std::vector<TopK> positions;                 ///< sensor-frame positions of each predicted frame
};

/**
 * Preconditions on all observed frames, then predicts `priors.size()` frames one at
 * a time, feeding every prediction back through construct_next_input(). Each
 * heatmap is upsampled to options.output_side before top-K extraction.
 */
template <typename T>
[[nodiscard]] RolloutResult rollout(const Model<T>& model, std::span<const grid::FrameStack> observed,
                                    std::span<const synth::StaticChannels> priors, std::size_t horizon,
                                    const RolloutOptions& options = {});

/// Top-K extraction on the heatmap upsampled to `output_side`.
[[nodiscard]] TopK extract_positions(const grid::SemanticGrid& heatmap, std::size_t output_side, std::size_t k,
                                     double nms_radius_cells = kDefaultNmsRadiusCells);

}  // namespace infer::forecast

#endif
