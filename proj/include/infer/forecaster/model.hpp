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

#ifndef INFER_FORECASTER_MODEL_HPP
#define INFER_FORECASTER_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "infer/autodiff/checkpoint.hpp"
#include "infer/autodiff/ops.hpp"
#include "infer/autodiff/optim.hpp"
#include "infer/gridcore/grid.hpp"

/**
 * \file
 * \brief Encoder / ConvLSTM / decoder forecaster.
 *
 * The encoder is a ladder of 3x3 conv + ReLU blocks; the first `pooled_blocks`
 * of them end in a 2x2 max pool and hand their pre-pool activation to the
 * decoder as a skip. A ConvLSTM over the encoder output carries temporal state.
 * Each decoder level upsamples by two, concatenates the matching skip and applies
 * a 3x3 conv + ReLU; a 1x1 conv + sigmoid produces the heatmap. The skip variant
 * adds residual ConvLSTMs on the deepest skips: s' = s + h(s).
 */

namespace infer::forecast {

enum class Variant { kInfer, kInferSkip };

[[nodiscard]] std::string variant_name(Variant v);
/// Accepts "infer" and "infer-skip" (case-insensitive).
[[nodiscard]] Variant variant_from_name(const std::string& name);

class ModelConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  Variant variant = Variant::kInferSkip;
  std::size_t input_side = 256;
  std::vector<std::size_t> encoder_channels{16, 32, 64, 64};
  std::size_t pooled_blocks = 3;
  std::size_t lstm_filters = 64;
  std::size_t lstm_kernel = 3;
  std::size_t decoder_out_channels = 8;
  std::size_t skip_lstm_count = 2;  ///< used by the skip variant only
  std::size_t precondition_frames = 20;
  std::size_t bptt_window = 20;
  double lambda_safe = 1e-3;
  /// Width of the Gaussian blob used as training target and as fed-back target channel.
  double target_sigma_cells = 1.5;

  /// Throws ModelConfigError for an inconsistent ladder.
  void validate() const;
  [[nodiscard]] std::size_t bottleneck_side() const { return input_side >> pooled_blocks; }
  [[nodiscard]] std::size_t active_skip_lstms() const {
    return variant == Variant::kInferSkip ? skip_lstm_count : 0;
  }

  /// Desk-scale configuration: 64-side input, 16 filters over a 4x4 bottleneck.
  [[nodiscard]] static ModelConfig micro();

  [[nodiscard]] std::map<std::string, std::string> to_metadata() const;
  [[nodiscard]] static ModelConfig from_metadata(const std::map<std::string, std::string>& meta);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/**
 * Initial head bias: the logit of the fraction of the grid a target blob covers
 * (2 pi sigma^2 / side^2). Starting from a zero bias, the empty background
 * dominates the reconstruction loss and drives the sigmoid into saturation
 * before any localization is learned.
 */
[[nodiscard]] double head_prior_logit(const ModelConfig& config);

template <typename T>
struct ForecastState {
  ad::ConvLstmState<T> bottleneck;
  std::vector<ad::ConvLstmState<T>> skips;  ///< deepest skip first
};

template <typename T>
[[nodiscard]] ForecastState<T> detach_state(const ForecastState<T>& s);

struct ShapeRecord {
  std::string stage;
  ad::Shape shape;
};

template <typename T>
struct StepOutput {
  ad::Tensor<T> heatmap;  ///< [1, 1, side, side], values in [0, 1]
  ForecastState<T> state;
};

template <typename T>
class Model {
 public:
  /// He fan-in initialization from `seed`; biases zero except the head (see head_prior_logit).
  Model(const ModelConfig& config, std::uint64_t seed);

  // Parameters are shared handles, so copies must be explicit.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  ~Model() = default;

  /// Deep copy with independent parameters.
  [[nodiscard]] Model clone() const;

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] ad::ParameterList<T>& parameters() { return params_; }
  [[nodiscard]] const ad::ParameterList<T>& parameters() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] ForecastState<T> zero_state() const;

  /// One timestep. Throws ad::ShapeError unless `input` is [1, 5, side, side].
  /// When `trace` is given, the activation shape after each stage is appended.
  [[nodiscard]] StepOutput<T> step(ad::Tape<T>& tape, const ad::Tensor<T>& input, const ForecastState<T>& state,
                                   std::vector<ShapeRecord>* trace = nullptr) const;

  [[nodiscard]] std::vector<ad::StoredParameter> export_parameters() const;
  /// Throws ad::CheckpointError when names or shapes disagree with this model.
  void import_parameters(const std::vector<ad::StoredParameter>& stored);

 private:
  struct Conv {
    ad::Tensor<T> weight;
    ad::Tensor<T> bias;
  };

  Conv add_conv(const std::string& name, std::size_t out, std::size_t in, std::size_t k);
  ad::ConvLstmWeights<T> add_lstm(const std::string& name, std::size_t in, std::size_t filters, std::size_t k);

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  ad::ParameterList<T> params_;
  std::vector<Conv> encoder_;
  std::vector<Conv> decoder_;  ///< decoder_[i] produces level i
  Conv head_;
  ad::ConvLstmWeights<T> bottleneck_;
  std::vector<ad::ConvLstmWeights<T>> skip_lstms_;  ///< deepest first
};

/// [1, 5, side, side] tensor of a frame's channel values.
template <typename T>
[[nodiscard]] ad::Tensor<T> frame_tensor(const grid::FrameStack& f);

/// Single-channel grid of a [1, 1, side, side] heatmap.
template <typename T>
[[nodiscard]] grid::SemanticGrid heatmap_grid(const ad::Tensor<T>& heatmap, const grid::GridSpec& spec);

/// Model whose convolution kernels are flipped along the row axis; on row-reflected
/// inputs it produces the row-reflected outputs of `m`.
template <typename T>
[[nodiscard]] Model<T> reflect_model_rows(const Model<T>& m);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace infer::forecast

#endif
