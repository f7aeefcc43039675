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

#include "infer/forecaster/rollout.hpp"

#include <stdexcept>
#include <string>

#include "infer/autodiff/fpenv.hpp"

namespace infer::forecast {

grid::FrameStack construct_next_input(const grid::FrameStack& prev, const grid::SemanticGrid& heatmap,
                                      const synth::StaticChannels& prior, double sigma_cells) {
  const auto& spec = prev.spec();
  if (heatmap.spec() != spec) {
    throw std::invalid_argument("construct_next_input: heatmap grid differs from the previous frame");
  }
  for (const auto* g : {&prior.obstacles, &prior.road, &prior.lane}) {
    if (g->spec() != spec) {
      throw std::invalid_argument("construct_next_input: missing or mismatched prior for the next frame");
    }
  }
  grid::FrameStack next = prev;
  next.channel(grid::Channel::kObstacles) = prior.obstacles;
  next.channel(grid::Channel::kRoad) = prior.road;
  next.channel(grid::Channel::kLane) = prior.lane;
  next.channel(grid::Channel::kTarget) = grid::render_gaussian_at_cell(heatmap.argmax(), sigma_cells, spec);
  return next;
}

template <typename T>
ForecastState<T> precondition(const Model<T>& model, std::span<const grid::FrameStack> frames) {
  if (frames.empty()) {
    throw std::invalid_argument("precondition: no frames");
  }
  ad::Tape<T> tape(false);
  auto state = model.zero_state();
  for (const auto& f : frames) {
    state = model.step(tape, frame_tensor<T>(f), state).state;
  }
  return state;
}

TopK extract_positions(const grid::SemanticGrid& heatmap, std::size_t output_side, std::size_t k,
                       double nms_radius_cells) {
  if (output_side == 0 || output_side == heatmap.side()) {
    return topk_positions(heatmap, k, nms_radius_cells);
  }
  return topk_positions(grid::upsample_to(heatmap, output_side), k, nms_radius_cells);
}

template <typename T>
RolloutResult rollout(const Model<T>& model, std::span<const grid::FrameStack> observed,
                      std::span<const synth::StaticChannels> priors, std::size_t horizon,
                      const RolloutOptions& options) {
  if (observed.empty()) {
    throw std::invalid_argument("rollout: no observed frames");
  }
  if (horizon > priors.size()) {
    throw std::invalid_argument("rollout: horizon " + std::to_string(horizon) + " exceeds the " +
                                std::to_string(priors.size()) + " frames of prior static channels");
  }
  const ad::FlushDenormals ftz;
  RolloutResult out;
  out.start_frame = observed.size();
  if (horizon == 0) {
    return out;
  }
  const auto& spec = observed.front().spec();
  auto state = observed.size() > 1 ? precondition(model, observed.first(observed.size() - 1)) : model.zero_state();
  ad::Tape<T> tape(false);
  grid::FrameStack input = observed.back();
  for (std::size_t i = 0; i < horizon; ++i) {
    auto step = model.step(tape, frame_tensor<T>(input), state);
    state = std::move(step.state);
    out.heatmaps.push_back(heatmap_grid(step.heatmap, spec));
    out.positions.push_back(
        extract_positions(out.heatmaps.back(), options.output_side, options.top_k, options.nms_radius_cells));
    if (i + 1 < horizon) {
      input = construct_next_input(input, out.heatmaps.back(), priors[i], model.config().target_sigma_cells);
    }
  }
  return out;
}

template ForecastState<float> precondition(const Model<float>&, std::span<const grid::FrameStack>);
template ForecastState<double> precondition(const Model<double>&, std::span<const grid::FrameStack>);
template RolloutResult rollout(const Model<float>&, std::span<const grid::FrameStack>,
                               std::span<const synth::StaticChannels>, std::size_t, const RolloutOptions&);
template RolloutResult rollout(const Model<double>&, std::span<const grid::FrameStack>,
                               std::span<const synth::StaticChannels>, std::size_t, const RolloutOptions&);

}  // namespace infer::forecast
