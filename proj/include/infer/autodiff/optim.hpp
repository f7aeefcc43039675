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

#ifndef INFER_AUTODIFF_OPTIM_HPP
#define INFER_AUTODIFF_OPTIM_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "infer/autodiff/tensor.hpp"

namespace infer::ad {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

template <typename T>
void zero_grads(ParameterList<T>& params) {
  for (auto& p : params) {
    p.tensor.zero_grad();
  }
}

/// Global L2 norm over every parameter gradient.
template <typename T>
[[nodiscard]] double global_grad_norm(const ParameterList<T>& params);

/// Scales all gradients by max_norm / g when the global norm g exceeds max_norm.
/// Returns the norm before clipping. Throws std::invalid_argument unless max_norm > 0.
template <typename T>
double clip_global_norm(ParameterList<T>& params, double max_norm = 10.0);

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& parameter)
      : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"), parameter_(parameter) {}
  [[nodiscard]] const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one pair per parameter, in parameter order.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

template <typename T>
[[nodiscard]] AdamState make_adam_state(const ParameterList<T>& params, const AdamConfig& config = {});

/**
 * Bias-corrected ADAM update of every parameter from its accumulated gradient.
 * Scans all gradients first; on a non-finite entry throws NonFiniteGradient
 * naming the parameter and leaves parameters and state untouched.
 */
template <typename T>
void adam_step(ParameterList<T>& params, AdamState& state);

}  // namespace infer::ad

#endif
