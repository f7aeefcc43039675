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

#include "infer/autodiff/optim.hpp"

#include <cmath>

namespace infer::ad {

template <typename T>
double global_grad_norm(const ParameterList<T>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) {
      continue;
    }
    for (const T g : p.tensor.grad()) {
      acc += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  return std::sqrt(acc);
}

template <typename T>
double clip_global_norm(ParameterList<T>& params, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  }
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const auto factor = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.tensor.has_grad()) {
        continue;
      }
      for (T& g : p.tensor.mutable_grad()) {
        g *= factor;
      }
    }
  }
  return norm;
}

template <typename T>
AdamState make_adam_state(const ParameterList<T>& params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.numel(), 0.0);
    s.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

template <typename T>
void adam_step(ParameterList<T>& params, AdamState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].tensor.numel()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + params[k].name + "'");
    }
    if (!params[k].tensor.has_grad()) {
      continue;
    }
    for (const T g : params[k].tensor.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NonFiniteGradient(params[k].name);
      }
    }
  }

  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    auto values = params[k].tensor.mutable_value();
    const bool has = params[k].tensor.has_grad();
    const auto grads = has ? params[k].tensor.grad() : std::span<const T>{};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has ? static_cast<double>(grads[i]) : 0.0;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] = static_cast<T>(static_cast<double>(values[i]) -
                                 cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

template double global_grad_norm(const ParameterList<float>&);
template double global_grad_norm(const ParameterList<double>&);
template double clip_global_norm(ParameterList<float>&, double);
template double clip_global_norm(ParameterList<double>&, double);
template AdamState make_adam_state(const ParameterList<float>&, const AdamConfig&);
template AdamState make_adam_state(const ParameterList<double>&, const AdamConfig&);
template void adam_step(ParameterList<float>&, AdamState&);
template void adam_step(ParameterList<double>&, AdamState&);

}  // namespace infer::ad
