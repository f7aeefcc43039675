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

#ifndef INFER_FORECASTER_TRAIN_HPP
#define INFER_FORECASTER_TRAIN_HPP

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infer/autodiff/optim.hpp"
#include "infer/forecaster/model.hpp"
#include "infer/synthgen/dataset.hpp"

namespace infer::forecast {

/// One scenario resampled to the model grid, with regression targets.
struct TrainingTrajectory {
  std::string id;
  std::vector<grid::FrameStack> frames;         ///< model-side inputs
  std::vector<grid::SemanticGrid> targets;      ///< Gaussian blob at the target center, per frame
  std::vector<grid::MetricPoint> target_positions;  ///< target center in each frame's sensor frame

  [[nodiscard]] std::size_t frame_count() const { return frames.size(); }
};

/// Model grid covering the same area as `render` with `side` cells per axis.
[[nodiscard]] grid::GridSpec model_spec_for(const grid::GridSpec& render, std::size_t side);

/// Downsamples a scenario to the model side; `ablate` zeroes that channel in every frame.
[[nodiscard]] TrainingTrajectory prepare_trajectory(const synth::ScenarioData& data, const ModelConfig& config,
                                                    std::optional<grid::Channel> ablate = std::nullopt);

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 1e-4;
  double clip_norm = 10.0;
  std::size_t teacher_forcing_epochs = 10;
  std::size_t max_predicted_frames = 0;  ///< per trajectory and epoch; 0 predicts to the end
  std::size_t ade_horizon = 10;
  std::size_t ade_every = 1;             ///< train/val ADE cadence in epochs; 0 never
  double early_stop_ade_cells = 0.0;     ///< stop once train ADE drops below this; 0 disables
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< zero-based
  double train_loss = 0.0;
  double train_ade_m = std::numeric_limits<double>::quiet_NaN();
  double val_ade_m = std::numeric_limits<double>::quiet_NaN();
  bool teacher_forced = false;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
  bool stopped_early = false;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& trajectory, const std::string& what)
      : std::runtime_error("training aborted in trajectory '" + trajectory + "': " + what), trajectory_(trajectory) {}
  [[nodiscard]] const std::string& trajectory() const { return trajectory_; }

 private:
  std::string trajectory_;
};

/**
 * Mean over `count` predicted frames starting at `first_frame` of
 * mse(heatmap, target) + lambda_safe * safety(heatmap, obstacles). `input` must be
 * the frame before `first_frame`; `state` and `input` are advanced in place. With
 * teacher forcing each step sees the true previous frame, otherwise the fed-back
 * prediction.
 */
template <typename T>
[[nodiscard]] ad::Tensor<T> window_loss(ad::Tape<T>& tape, const Model<T>& model, const TrainingTrajectory& traj,
                                        std::size_t first_frame, std::size_t count, bool teacher_forced,
                                        ForecastState<T>& state, grid::FrameStack& input);

/// Rollout ADE in metres over up to `horizon` frames after preconditioning, at model resolution.
template <typename T>
[[nodiscard]] double trajectory_ade(const Model<T>& model, const TrainingTrajectory& traj, std::size_t horizon);

/**
 * Epochs [first_epoch, cfg.epochs): every trajectory is preconditioned, then
 * predicted in truncated-BPTT windows; after each window the loss is
 * backpropagated, gradients clipped, ADAM applied and the state detached.
 */
template <typename T>
TrainResult train(Model<T>& model, ad::AdamState& optimizer, std::span<const TrainingTrajectory> train_set,
                  std::span<const TrainingTrajectory> val_set, const TrainConfig& cfg, std::size_t first_epoch = 0,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Writes config and parameters; returns the checkpoint hash.
std::string save_model(const std::filesystem::path& path, const Model<float>& model,
                       const std::map<std::string, std::string>& extra_metadata = {});

struct LoadedModel {
  Model<float> model;
  std::map<std::string, std::string> metadata;
  std::string hash;
};
[[nodiscard]] LoadedModel load_model(const std::filesystem::path& path);

void save_optimizer(const std::filesystem::path& path, const ad::AdamState& state);
[[nodiscard]] ad::AdamState load_optimizer(const std::filesystem::path& path);

}  // namespace infer::forecast

#endif
