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

#ifndef INFER_AUTODIFF_OPS_HPP
#define INFER_AUTODIFF_OPS_HPP

#include <cstddef>
#include <vector>

#include "infer/autodiff/tensor.hpp"

/**
 * \file
 * \brief The differentiable operators used by the forecaster.
 *
 * Image tensors are NCHW. Every op throws ShapeError naming the offending
 * dimensions. Instantiated for float (training) and double (gradient checks).
 */

namespace infer::ad {

/// Cross-correlation. `bias` may be an undefined Tensor.
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t pad = 0);

/// 2x2 max pooling, stride 2. The gradient goes to the first maximal element of each window.
template <typename T>
Tensor<T> maxpool2(Tape<T>& tape, const Tensor<T>& x);

/// Doubles H and W by bilinear interpolation with aligned corners.
template <typename T>
Tensor<T> bilinear_up2(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise product.
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor);

/// Concatenation along the channel axis (dim 1).
template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const std::vector<Tensor<T>>& parts);

/// Channels [begin, begin + count) of an NCHW tensor.
template <typename T>
Tensor<T> slice_channels(Tape<T>& tape, const Tensor<T>& x, std::size_t begin, std::size_t count);

/// Sum of all elements, returned as a scalar.
template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

/// Sum of squared differences divided by the element count.
template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target);

/// L2 norm of mask * pred. The mask is treated as a constant; the gradient at a zero norm is zero.
template <typename T>
Tensor<T> safety_loss(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& obstacle_mask);

/// Weights of one convolutional LSTM cell. Gate order in the 4F output channels: input, forget, output, cell.
template <typename T>
struct ConvLstmWeights {
  Tensor<T> input_weight;   ///< [4F, C, k, k]
  Tensor<T> hidden_weight;  ///< [4F, F, k, k]
  Tensor<T> bias;           ///< [4F]

  [[nodiscard]] std::size_t filters() const { return input_weight.dim(0) / 4; }
};

template <typename T>
struct ConvLstmState {
  Tensor<T> hidden;  ///< [N, F, H, W]
  Tensor<T> cell;    ///< [N, F, H, W]
};

/// Zero state for `filters` channels over an n x h x w batch.
template <typename T>
ConvLstmState<T> zero_lstm_state(std::size_t batch, std::size_t filters, std::size_t height, std::size_t width);

/**
 * One ConvLSTM step with same padding:
 *
 *     i = sigmoid(Wxi*x + Whi*h + bi)    f = sigmoid(Wxf*x + Whf*h + bf)
 *     o = sigmoid(Wxo*x + Who*h + bo)    g = tanh(Wxg*x + Whg*h + bg)
 *     c' = f . c + i . g                 h' = o . tanh(c')
 */
template <typename T>
ConvLstmState<T> conv_lstm_step(Tape<T>& tape, const Tensor<T>& x, const ConvLstmState<T>& state,
                                const ConvLstmWeights<T>& weights);

}  // namespace infer::ad

#endif
