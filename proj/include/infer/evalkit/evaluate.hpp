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


#ifndef INFER_EVALKIT_EVALUATE_HPP
#define INFER_EVALKIT_EVALUATE_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infer/evalkit/metrics.hpp"
#include "infer/evalkit/report.hpp"
#include "infer/forecaster/model.hpp"
#include "infer/forecaster/topk.hpp"
#include "infer/markov/bayes_filter.hpp"
#include "infer/synthgen/dataset.hpp"

/**
 * \file
 * \brief Rollout-based evaluation of the forecaster and of the Markov baseline,
 * plus the channel, frame-rate and association drivers built on it.
 *
 * Every scenario is split at the preconditioning length P: frames before P are
 * observed, frames from P on are predicted up to the longest requested horizon.
 * Step times are measured from frame P - 1, so a subsampled sequence is scored
 * over the same stretch of time as the full one; prediction runs through the
 * first kept frame at or past the longest horizon. Predictions are mapped to the
 * world frame with the known ego poses before they are compared with the truth.
 */

namespace infer::eval {

/// Either a trained forecaster or the Bayes-filter baseline.
struct Method {
  const forecast::Model<float>* model = nullptr;  ///< nullptr selects the baseline
  markov::FilterConfig filter;
  std::string checkpoint_hash;

  [[nodiscard]] static Method forecaster(const forecast::Model<float>& m, std::string hash) {
    return {&m, {}, std::move(hash)};
  }
  [[nodiscard]] static Method baseline(const markov::FilterConfig& cfg = {}) { return {nullptr, cfg, {}}; }

  [[nodiscard]] bool is_baseline() const { return model == nullptr; }
  [[nodiscard]] std::string name() const;
};

struct EvalOptions {
  std::vector<double> horizons_s{1.0, 2.0, 3.0, 4.0};
  std::size_t top_k = 1;
  BestOfK best_of_k = BestOfK::kPerStep;
  std::size_t precondition_frames = 0;  ///< 0 takes the model's value, or 20 for the baseline
  std::optional<grid::Channel> ablate;  ///< zeroed in every model input frame
  double keep_ratio = 1.0;
  std::size_t threads = 1;
  double nms_radius_cells = forecast::kDefaultNmsRadiusCells;
  bool keep_heatmaps = false;
  std::map<std::string, std::string> fingerprint;  ///< merged into the report fingerprint
};

/// Scenarios by index, loaded on demand so large datasets never sit in memory at once.
struct ScenarioSource {
  std::size_t count = 0;
  std::function<synth::ScenarioData(std::size_t)> load;

  [[nodiscard]] static ScenarioSource in_memory(std::span<const synth::ScenarioData> data);
  [[nodiscard]] static ScenarioSource on_disk(const std::filesystem::path& dir, const synth::DatasetManifest& manifest,
                                              std::vector<std::size_t> indices);
};

struct ScenarioPrediction {
  std::string id;
  std::vector<std::size_t> observed_frames;
  std::vector<std::size_t> predicted_frames;
  std::vector<double> times_s;
  std::vector<std::vector<WorldPoint>> hypotheses;  ///< per step, best first; never empty
  std::vector<WorldPoint> truth;
  std::vector<WorldPoint> observed_truth;           ///< VoI at the observed frames
  std::vector<grid::SemanticGrid> heatmaps;         ///< model side; only with keep_heatmaps
  bool belief_lost = false;
};

/**
 * Throws std::invalid_argument when the scenario is too short for P plus one
 * predicted frame, or when fewer observed frames survive subsampling than the
 * method needs (1 for the forecaster, 2 for the baseline).
 */
[[nodiscard]] ScenarioPrediction predict_scenario(const Method& method, const synth::ScenarioData& data,
                                                  const EvalOptions& options);

/// Per-frame errors and horizon tables of the given predictions.
[[nodiscard]] EvalReport build_report(std::span<const ScenarioPrediction> predictions, const Method& method,
                                      const EvalOptions& options);

/**
 * predict_scenario() over every source scenario on up to options.threads
 * workers; results are merged in scenario id order. When `predictions` is
 * non-null it receives them in that order.
 */
[[nodiscard]] EvalReport evaluate(const Method& method, const ScenarioSource& source, const EvalOptions& options,
                                  std::vector<ScenarioPrediction>* predictions = nullptr);

/// evaluate() with `channel` zeroed in every input frame. Throws std::invalid_argument for an unknown name.
[[nodiscard]] EvalReport channel_ablation_run(const Method& method, const ScenarioSource& source,
                                              std::string_view channel, const EvalOptions& options);

/// One evaluate() per distinct ratio in (0, 1], sorted by descending ratio.
[[nodiscard]] std::vector<RateRow> frame_rate_ablation_run(const Method& method, const ScenarioSource& source,
                                                           std::span<const double> keep_ratios,
                                                           const EvalOptions& options);

struct AssociationRow {
  std::string id;
  std::size_t vehicles = 0;  ///< VoI plus other traffic
  std::size_t frames = 0;
  std::size_t correct = 0;

  [[nodiscard]] double accuracy() const {
    return frames == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(frames);
  }
};

struct AssociationTable {
  std::vector<AssociationRow> rows;
  std::size_t frames = 0;
  std::size_t correct = 0;
  std::size_t multi_vehicle_scenarios = 0;

  [[nodiscard]] double accuracy() const {
    return frames == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(frames);
  }
};

/**
 * Matches every Top-1 prediction to the nearest vehicle present in that frame.
 * Detections list the other vehicles first and the VoI last, so a tie never
 * counts in the VoI's favour.
 */
[[nodiscard]] AssociationTable association_run(const Method& method, const ScenarioSource& source,
                                               const EvalOptions& options);

[[nodiscard]] std::string format_association(const AssociationTable& table);

}  // namespace infer::eval

#endif
