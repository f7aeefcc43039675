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

#include "infer/forecaster/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace infer::forecast {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + std::to_string(v[i]);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    out.push_back(std::stoul(item));
  }
  return out;
}

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw ad::CheckpointError("checkpoint metadata lacks '" + key + "'");
  }
  return it->second;
}

}  // namespace

double head_prior_logit(const ModelConfig& config) {
  const double side = static_cast<double>(config.input_side);
  const double p = std::min(0.5, 2.0 * std::numbers::pi * config.target_sigma_cells * config.target_sigma_cells /
                                     (side * side));
  return std::log(p / (1.0 - p));
}

std::string variant_name(Variant v) { return v == Variant::kInfer ? "infer" : "infer-skip"; }

Variant variant_from_name(const std::string& name) {
  const auto n = lower(name);
  if (n == "infer") {
    return Variant::kInfer;
  }
  if (n == "infer-skip") {
    return Variant::kInferSkip;
  }
  throw ModelConfigError("unknown variant '" + name + "' (expected infer or infer-skip)");
}

void ModelConfig::validate() const {
  if (encoder_channels.empty()) {
    throw ModelConfigError("encoder ladder is empty");
  }
  if (pooled_blocks == 0 || pooled_blocks > encoder_channels.size()) {
    throw ModelConfigError("pooled_blocks must lie in [1, " + std::to_string(encoder_channels.size()) + "]");
  }
  if (input_side == 0 || input_side % (std::size_t{1} << pooled_blocks) != 0) {
    throw ModelConfigError("input side " + std::to_string(input_side) + " is not divisible by 2^" +
                           std::to_string(pooled_blocks));
  }
  if (std::any_of(encoder_channels.begin(), encoder_channels.end(), [](std::size_t c) { return c == 0; }) ||
      lstm_filters == 0 || decoder_out_channels == 0) {
    throw ModelConfigError("channel counts must be positive");
  }
  if (lstm_kernel % 2 == 0) {
    throw ModelConfigError("ConvLSTM kernel must be odd");
  }
  if (variant == Variant::kInferSkip && skip_lstm_count > pooled_blocks) {
    throw ModelConfigError("skip_lstm_count exceeds the number of skips (" + std::to_string(pooled_blocks) + ")");
  }
  if (precondition_frames == 0 || bptt_window == 0) {
    throw ModelConfigError("precondition_frames and bptt_window must be positive");
  }
  if (!(target_sigma_cells > 0.0)) {
    throw ModelConfigError("target_sigma_cells must be positive");
  }
  if (!(lambda_safe >= 0.0) || !std::isfinite(lambda_safe)) {
    throw ModelConfigError("lambda_safe must be finite and non-negative");
  }
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.input_side = 64;
  c.encoder_channels = {8, 16, 16, 16};
  c.pooled_blocks = 4;
  c.lstm_filters = 16;
  return c;
}

std::map<std::string, std::string> ModelConfig::to_metadata() const {
  auto real = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {{"variant", variant_name(variant)},
          {"input_side", std::to_string(input_side)},
          {"encoder_channels", join_sizes(encoder_channels)},
          {"pooled_blocks", std::to_string(pooled_blocks)},
          {"lstm_filters", std::to_string(lstm_filters)},
          {"lstm_kernel", std::to_string(lstm_kernel)},
          {"decoder_out_channels", std::to_string(decoder_out_channels)},
          {"skip_lstm_count", std::to_string(skip_lstm_count)},
          {"precondition_frames", std::to_string(precondition_frames)},
          {"bptt_window", std::to_string(bptt_window)},
          {"lambda_safe", real(lambda_safe)},
          {"target_sigma_cells", real(target_sigma_cells)}};
}

ModelConfig ModelConfig::from_metadata(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  try {
    c.variant = variant_from_name(require(meta, "variant"));
    c.input_side = std::stoul(require(meta, "input_side"));
    c.encoder_channels = split_sizes(require(meta, "encoder_channels"));
    c.pooled_blocks = std::stoul(require(meta, "pooled_blocks"));
    c.lstm_filters = std::stoul(require(meta, "lstm_filters"));
    c.lstm_kernel = std::stoul(require(meta, "lstm_kernel"));
    c.decoder_out_channels = std::stoul(require(meta, "decoder_out_channels"));
    c.skip_lstm_count = std::stoul(require(meta, "skip_lstm_count"));
    c.precondition_frames = std::stoul(require(meta, "precondition_frames"));
    c.bptt_window = std::stoul(require(meta, "bptt_window"));
    c.lambda_safe = std::stod(require(meta, "lambda_safe"));
    c.target_sigma_cells = std::stod(require(meta, "target_sigma_cells"));
  } catch (const std::logic_error& e) {
    throw ad::CheckpointError(std::string("bad model metadata: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
ForecastState<T> detach_state(const ForecastState<T>& s) {
  ForecastState<T> out{{ad::detach(s.bottleneck.hidden), ad::detach(s.bottleneck.cell)}, {}};
  for (const auto& k : s.skips) {
    out.skips.push_back({ad::detach(k.hidden), ad::detach(k.cell)});
  }
  return out;
}

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto& ch = config_.encoder_channels;
  std::size_t in = grid::kChannelCount;
  for (std::size_t b = 0; b < ch.size(); ++b) {
    encoder_.push_back(add_conv("encoder" + std::to_string(b), ch[b], in, 3));
    in = ch[b];
  }
  bottleneck_ = add_lstm("bottleneck", in, config_.lstm_filters, config_.lstm_kernel);
  for (std::size_t k = 0; k < config_.active_skip_lstms(); ++k) {
    const std::size_t level = config_.pooled_blocks - 1 - k;
    skip_lstms_.push_back(add_lstm("skip" + std::to_string(level), ch[level], ch[level], config_.lstm_kernel));
  }
  decoder_.resize(config_.pooled_blocks);
  std::size_t below = config_.lstm_filters;
  for (std::size_t i = config_.pooled_blocks; i-- > 0;) {
    const std::size_t out = i == 0 ? config_.decoder_out_channels : ch[i];
    decoder_[i] = add_conv("decoder" + std::to_string(i), out, below + ch[i], 3);
    below = out;
  }
  head_ = add_conv("head", 1, config_.decoder_out_channels, 1);
  head_.bias.mutable_value()[0] = static_cast<T>(head_prior_logit(config_));

  for (auto& p : params_) {
    auto values = p.tensor.mutable_value();
    const auto& shape = p.tensor.shape();
    if (shape.size() != 4) {
      continue;
    }
    const double fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : values) {
      v = static_cast<T>(dist(rng));
    }
  }
}

template <typename T>
typename Model<T>::Conv Model<T>::add_conv(const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
  Conv c{ad::Tensor<T>::parameter({out, in, k, k}, std::vector<T>(out * in * k * k, T{0})),
         ad::Tensor<T>::parameter({out}, std::vector<T>(out, T{0}))};
  params_.push_back({name + ".weight", c.weight});
  params_.push_back({name + ".bias", c.bias});
  return c;
}

template <typename T>
ad::ConvLstmWeights<T> Model<T>::add_lstm(const std::string& name, std::size_t in, std::size_t filters,
                                          std::size_t k) {
  const std::size_t g = 4 * filters;
  ad::ConvLstmWeights<T> w{ad::Tensor<T>::parameter({g, in, k, k}, std::vector<T>(g * in * k * k, T{0})),
                           ad::Tensor<T>::parameter({g, filters, k, k}, std::vector<T>(g * filters * k * k, T{0})),
                           ad::Tensor<T>::parameter({g}, std::vector<T>(g, T{0}))};
  params_.push_back({name + ".input_weight", w.input_weight});
  params_.push_back({name + ".hidden_weight", w.hidden_weight});
  params_.push_back({name + ".bias", w.bias});
  return w;
}

template <typename T>
Model<T> Model<T>::clone() const {
  Model<T> copy(config_, seed_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto src = params_[i].tensor.value();
    std::copy(src.begin(), src.end(), copy.params_[i].tensor.mutable_value().begin());
  }
  return copy;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    n += p.tensor.numel();
  }
  return n;
}

template <typename T>
ForecastState<T> Model<T>::zero_state() const {
  ForecastState<T> s;
  const std::size_t b = config_.bottleneck_side();
  s.bottleneck = ad::zero_lstm_state<T>(1, config_.lstm_filters, b, b);
  for (std::size_t k = 0; k < skip_lstms_.size(); ++k) {
    const std::size_t level = config_.pooled_blocks - 1 - k;
    const std::size_t side = config_.input_side >> level;
    s.skips.push_back(ad::zero_lstm_state<T>(1, config_.encoder_channels[level], side, side));
  }
  return s;
}

template <typename T>
StepOutput<T> Model<T>::step(ad::Tape<T>& tape, const ad::Tensor<T>& input, const ForecastState<T>& state,
                             std::vector<ShapeRecord>* trace) const {
  const ad::Shape expected{1, grid::kChannelCount, config_.input_side, config_.input_side};
  if (input.shape() != expected) {
    throw ad::ShapeError("Model::step: input " + ad::shape_string(input.shape()) + ", expected " +
                         ad::shape_string(expected));
  }
  auto record = [trace](const std::string& stage, const ad::Tensor<T>& t) {
    if (trace != nullptr) {
      trace->push_back({stage, t.shape()});
    }
  };
  record("input", input);

  std::vector<ad::Tensor<T>> skips;
  ad::Tensor<T> x = input;
  for (std::size_t b = 0; b < encoder_.size(); ++b) {
    x = ad::relu(tape, ad::conv2d(tape, x, encoder_[b].weight, encoder_[b].bias, 1, 1));
    if (b < config_.pooled_blocks) {
      skips.push_back(x);
      x = ad::maxpool2(tape, x);
    }
    record("encoder" + std::to_string(b), x);
  }

  StepOutput<T> out;
  out.state.bottleneck = ad::conv_lstm_step(tape, x, state.bottleneck, bottleneck_);
  ad::Tensor<T> y = out.state.bottleneck.hidden;
  record("bottleneck", y);

  for (std::size_t k = 0; k < skip_lstms_.size(); ++k) {
    const std::size_t level = config_.pooled_blocks - 1 - k;
    auto next = ad::conv_lstm_step(tape, skips[level], state.skips.at(k), skip_lstms_[k]);
    skips[level] = ad::add(tape, skips[level], next.hidden);
    out.state.skips.push_back(std::move(next));
    record("skip" + std::to_string(level), skips[level]);
  }

  for (std::size_t i = config_.pooled_blocks; i-- > 0;) {
    y = ad::bilinear_up2(tape, y);
    y = ad::concat_channels(tape, std::vector<ad::Tensor<T>>{y, skips[i]});
    y = ad::relu(tape, ad::conv2d(tape, y, decoder_[i].weight, decoder_[i].bias, 1, 1));
    record("decoder" + std::to_string(i), y);
  }
  out.heatmap = ad::sigmoid(tape, ad::conv2d(tape, y, head_.weight, head_.bias));
  record("head", out.heatmap);
  return out;
}

template <typename T>
std::vector<ad::StoredParameter> Model<T>::export_parameters() const {
  std::vector<ad::StoredParameter> out;
  for (const auto& p : params_) {
    out.push_back({p.name, p.tensor.shape(), std::vector<float>(p.tensor.value().begin(), p.tensor.value().end())});
  }
  return out;
}

template <typename T>
void Model<T>::import_parameters(const std::vector<ad::StoredParameter>& stored) {
  if (stored.size() != params_.size()) {
    throw ad::CheckpointError("checkpoint holds " + std::to_string(stored.size()) + " parameters, model has " +
                              std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < stored.size(); ++i) {
    auto& p = params_[i];
    if (stored[i].name != p.name || stored[i].shape != p.tensor.shape()) {
      throw ad::CheckpointError("checkpoint parameter '" + stored[i].name + "' " + ad::shape_string(stored[i].shape) +
                                " does not match model parameter '" + p.name + "' " +
                                ad::shape_string(p.tensor.shape()));
    }
    std::transform(stored[i].data.begin(), stored[i].data.end(), p.tensor.mutable_value().begin(),
                   [](float v) { return static_cast<T>(v); });
  }
}

template <typename T>
ad::Tensor<T> frame_tensor(const grid::FrameStack& f) {
  const std::size_t n = f.spec().cell_count();
  std::vector<T> values(grid::kChannelCount * n);
  for (std::size_t c = 0; c < grid::kChannelCount; ++c) {
    const auto src = f.channels[c].values();
    std::transform(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(c * n),
                   [](float v) { return static_cast<T>(v); });
  }
  return ad::Tensor<T>::constant({1, grid::kChannelCount, f.spec().side(), f.spec().side()}, std::move(values));
}

template <typename T>
grid::SemanticGrid heatmap_grid(const ad::Tensor<T>& heatmap, const grid::GridSpec& spec) {
  if (heatmap.numel() != spec.cell_count()) {
    throw ad::ShapeError("heatmap_grid: " + ad::shape_string(heatmap.shape()) + " does not fit a " +
                         std::to_string(spec.side()) + "-side grid");
  }
  grid::SemanticGrid g(spec);
  std::transform(heatmap.value().begin(), heatmap.value().end(), g.values().begin(),
                 [](T v) { return static_cast<float>(v); });
  return g;
}

template <typename T>
Model<T> reflect_model_rows(const Model<T>& m) {
  auto stored = m.export_parameters();
  for (auto& p : stored) {
    if (p.shape.size() != 4) {
      continue;
    }
    const std::size_t kh = p.shape[2];
    const std::size_t kw = p.shape[3];
    const std::size_t planes = p.shape[0] * p.shape[1];
    for (std::size_t q = 0; q < planes; ++q) {
      float* base = p.data.data() + q * kh * kw;
      for (std::size_t r = 0; r < kh / 2; ++r) {
        std::swap_ranges(base + r * kw, base + (r + 1) * kw, base + (kh - 1 - r) * kw);
      }
    }
  }
  Model<T> out(m.config(), 0);
  out.import_parameters(stored);
  return out;
}

#define INFER_FORECAST_INSTANTIATE(T)                                                               \
  template class Model<T>;                                                                          \
  template ForecastState<T> detach_state(const ForecastState<T>&);                                  \
  template ad::Tensor<T> frame_tensor<T>(const grid::FrameStack&);                                  \
  template grid::SemanticGrid heatmap_grid<T>(const ad::Tensor<T>&, const grid::GridSpec&);         \
  template Model<T> reflect_model_rows(const Model<T>&);

INFER_FORECAST_INSTANTIATE(float)
INFER_FORECAST_INSTANTIATE(double)

#undef INFER_FORECAST_INSTANTIATE

}  // namespace infer::forecast
