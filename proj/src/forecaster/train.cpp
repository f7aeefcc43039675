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

#include "infer/forecaster/train.hpp"

#include <cmath>
#include <sstream>

#include "infer/autodiff/fpenv.hpp"
#include "infer/forecaster/rollout.hpp"

namespace infer::forecast {

namespace {

template <typename T>
ad::Tensor<T> grid_tensor(const grid::SemanticGrid& g) {
  std::vector<T> v(g.values().begin(), g.values().end());
  return ad::Tensor<T>::constant({1, 1, g.side(), g.side()}, std::move(v));
}

std::string real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double mean(const std::vector<double>& v) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double s = 0.0;
  for (const double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

template <typename T>
double set_ade(const Model<T>& model, std::span<const TrainingTrajectory> set, std::size_t horizon) {
  std::vector<double> values;
  for (const auto& t : set) {
    const double a = trajectory_ade(model, t, horizon);
    if (std::isfinite(a)) {
      values.push_back(a);
    }
  }
  return mean(values);
}

}  // namespace

grid::GridSpec model_spec_for(const grid::GridSpec& render, std::size_t side) {
  if (side == 0 || render.side() % side != 0) {
    throw std::invalid_argument("model side " + std::to_string(side) + " does not divide render side " +
                                std::to_string(render.side()));
  }
  return {side, render.resolution() * static_cast<double>(render.side() / side)};
}

TrainingTrajectory prepare_trajectory(const synth::ScenarioData& data, const ModelConfig& config,
                                      std::optional<grid::Channel> ablate) {
  if (data.frames.empty()) {
    throw std::invalid_argument("prepare_trajectory: scenario '" + data.id + "' has no frames");
  }
  const auto spec = model_spec_for(data.frames.front().spec(), config.input_side);
  TrainingTrajectory t;
  t.id = data.id;
  for (std::size_t k = 0; k < data.frames.size(); ++k) {
    auto f = grid::downsample_frame(data.frames[k], config.input_side);
    if (ablate) {
      f = grid::zero_channel(f, *ablate);
    }
    t.frames.push_back(std::move(f));
    const auto& target = data.target_track.at(k);
    const auto p = grid::to_sensor_frame(data.ego_track.at(k), {target.x, target.y});
    t.target_positions.push_back(p);
    t.targets.push_back(grid::render_gaussian_target(p, config.target_sigma_cells, spec).grid);
  }
  return t;
}

template <typename T>
ad::Tensor<T> window_loss(ad::Tape<T>& tape, const Model<T>& model, const TrainingTrajectory& traj,
                          std::size_t first_frame, std::size_t count, bool teacher_forced, ForecastState<T>& state,
                          grid::FrameStack& input) {
  if (count == 0 || first_frame + count > traj.frame_count()) {
    throw std::out_of_range("window_loss: window exceeds trajectory '" + traj.id + "'");
  }
  const auto lambda = static_cast<T>(model.config().lambda_safe);
  ad::Tensor<T> total;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t k = first_frame + j;
    auto out = model.step(tape, frame_tensor<T>(input), state);
    auto term = ad::mse_loss(tape, out.heatmap, grid_tensor<T>(traj.targets[k]));
    if (lambda != T{0}) {
      const auto mask = grid_tensor<T>(traj.frames[k].channel(grid::Channel::kObstacles));
      term = ad::add(tape, term, ad::scale(tape, ad::safety_loss(tape, out.heatmap, mask), lambda));
    }
    total = total.defined() ? ad::add(tape, total, term) : term;
    state = std::move(out.state);
    if (teacher_forced) {
      input = traj.frames[k];
    } else {
      input = construct_next_input(input, heatmap_grid(out.heatmap, input.spec()),
                                   synth::static_channels_of(traj.frames[k]), model.config().target_sigma_cells);
    }
  }
  return ad::scale(tape, total, T{1} / static_cast<T>(count));
}

template <typename T>
double trajectory_ade(const Model<T>& model, const TrainingTrajectory& traj, std::size_t horizon) {
  const std::size_t p = std::min(model.config().precondition_frames, traj.frame_count() - 1);
  const std::size_t h = std::min(horizon, traj.frame_count() - p);
  if (h == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<synth::StaticChannels> priors;
  for (std::size_t k = p; k < p + h; ++k) {
    priors.push_back(synth::static_channels_of(traj.frames[k]));
  }
  const auto r = rollout(model, std::span(traj.frames).first(p), priors, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    const auto& pred = r.positions[i].hypotheses.front().position;
    const auto& truth = traj.target_positions[p + i];
    sum += std::hypot(pred.x - truth.x, pred.z - truth.z);
  }
  return sum / static_cast<double>(h);
}

template <typename T>
TrainResult train(Model<T>& model, ad::AdamState& optimizer, std::span<const TrainingTrajectory> train_set,
                  std::span<const TrainingTrajectory> val_set, const TrainConfig& cfg, std::size_t first_epoch,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (!(cfg.clip_norm > 0.0)) {
    throw std::invalid_argument("train: clip norm must be positive");
  }
  const ad::FlushDenormals ftz;
  optimizer.config.learning_rate = cfg.learning_rate;
  auto& params = model.parameters();
  const auto& mc = model.config();
  const double cell = train_set.empty() ? 1.0 : train_set.front().frames.front().spec().resolution();
  TrainResult result;
  for (std::size_t epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.teacher_forced = epoch < cfg.teacher_forcing_epochs;
    std::vector<double> losses;
    for (const auto& traj : train_set) {
      if (traj.frame_count() < 2) {
        continue;
      }
      const std::size_t p = std::min(mc.precondition_frames, traj.frame_count() - 1);
      auto state = p > 1 ? precondition(model, std::span(traj.frames).first(p - 1)) : model.zero_state();
      grid::FrameStack input = traj.frames[p - 1];
      std::size_t end = traj.frame_count();
      if (cfg.max_predicted_frames > 0) {
        end = std::min(end, p + cfg.max_predicted_frames);
      }
      for (std::size_t k = p; k < end;) {
        const std::size_t w = std::min(mc.bptt_window, end - k);
        ad::Tape<T> tape;
        const auto loss = window_loss(tape, model, traj, k, w, rec.teacher_forced, state, input);
        const double value = static_cast<double>(loss.item());
        if (!std::isfinite(value)) {
          throw TrainingError(traj.id, "non-finite loss at frame " + std::to_string(k));
        }
        ad::zero_grads(params);
        tape.backward(loss);
        try {
          ad::clip_global_norm(params, cfg.clip_norm);
          ad::adam_step(params, optimizer);
        } catch (const ad::NonFiniteGradient& e) {
          throw TrainingError(traj.id, e.what());
        }
        tape.clear();
        state = detach_state(state);
        losses.push_back(value);
        k += w;
      }
    }
    rec.train_loss = mean(losses);
    if (cfg.ade_every > 0 && ((epoch + 1) % cfg.ade_every == 0 || epoch + 1 == cfg.epochs)) {
      rec.train_ade_m = set_ade(model, train_set, cfg.ade_horizon);
      if (!val_set.empty()) {
        rec.val_ade_m = set_ade(model, val_set, cfg.ade_horizon);
      }
    }
    result.curve.push_back(rec);
    if (on_epoch) {
      on_epoch(rec);
    }
    if (cfg.early_stop_ade_cells > 0.0 && std::isfinite(rec.train_ade_m) &&
        rec.train_ade_m < cfg.early_stop_ade_cells * cell) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

std::string save_model(const std::filesystem::path& path, const Model<float>& model,
                       const std::map<std::string, std::string>& extra_metadata) {
  ad::Checkpoint ckpt;
  ckpt.metadata = model.config().to_metadata();
  for (const auto& [k, v] : extra_metadata) {
    ckpt.metadata[k] = v;
  }
  ckpt.parameters = model.export_parameters();
  return ad::hex64(ad::write_checkpoint(path, ckpt));
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto ckpt = ad::read_checkpoint(path);
  Model<float> model(ModelConfig::from_metadata(ckpt.metadata), 0);
  model.import_parameters(ckpt.parameters);
  return {std::move(model), std::move(ckpt.metadata), ad::checkpoint_hash(path)};
}

void save_optimizer(const std::filesystem::path& path, const ad::AdamState& state) {
  ad::Checkpoint ckpt;
  ckpt.metadata = {{"kind", "adam"},
                   {"step", std::to_string(state.step)},
                   {"learning_rate", real(state.config.learning_rate)},
                   {"beta1", real(state.config.beta1)},
                   {"beta2", real(state.config.beta2)},
                   {"epsilon", real(state.config.epsilon)}};
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    const auto& m = state.first_moment[i];
    const auto& v = state.second_moment[i];
    ckpt.parameters.push_back({"m" + std::to_string(i), {m.size()}, std::vector<float>(m.begin(), m.end())});
    ckpt.parameters.push_back({"v" + std::to_string(i), {v.size()}, std::vector<float>(v.begin(), v.end())});
  }
  ad::write_checkpoint(path, ckpt);
}

ad::AdamState load_optimizer(const std::filesystem::path& path) {
  const auto ckpt = ad::read_checkpoint(path);
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end()) {
      throw ad::CheckpointError("optimizer file lacks '" + key + "'");
    }
    return it->second;
  };
  if (get("kind") != "adam" || ckpt.parameters.size() % 2 != 0) {
    throw ad::CheckpointError("not an optimizer state file: " + path.string());
  }
  ad::AdamState s;
  s.step = std::stoull(get("step"));
  s.config.learning_rate = std::stod(get("learning_rate"));
  s.config.beta1 = std::stod(get("beta1"));
  s.config.beta2 = std::stod(get("beta2"));
  s.config.epsilon = std::stod(get("epsilon"));
  for (std::size_t i = 0; i < ckpt.parameters.size(); i += 2) {
    const auto& m = ckpt.parameters[i].data;
    const auto& v = ckpt.parameters[i + 1].data;
    s.first_moment.emplace_back(m.begin(), m.end());
    s.second_moment.emplace_back(v.begin(), v.end());
  }
  return s;
}

template ad::Tensor<float> window_loss(ad::Tape<float>&, const Model<float>&, const TrainingTrajectory&, std::size_t,
                                       std::size_t, bool, ForecastState<float>&, grid::FrameStack&);
template ad::Tensor<double> window_loss(ad::Tape<double>&, const Model<double>&, const TrainingTrajectory&,
                                        std::size_t, std::size_t, bool, ForecastState<double>&, grid::FrameStack&);
template double trajectory_ade(const Model<float>&, const TrainingTrajectory&, std::size_t);
template double trajectory_ade(const Model<double>&, const TrainingTrajectory&, std::size_t);
template TrainResult train(Model<float>&, ad::AdamState&, std::span<const TrainingTrajectory>,
                           std::span<const TrainingTrajectory>, const TrainConfig&, std::size_t,
                           const std::function<void(const EpochRecord&)>&);
template TrainResult train(Model<double>&, ad::AdamState&, std::span<const TrainingTrajectory>,
                           std::span<const TrainingTrajectory>, const TrainConfig&, std::size_t,
                           const std::function<void(const EpochRecord&)>&);

}  // namespace infer::forecast
