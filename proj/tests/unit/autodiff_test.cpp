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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "infer/autodiff/checkpoint.hpp"
#include "infer/autodiff/ops.hpp"
#include "infer/autodiff/optim.hpp"

namespace {

using infer::testing::DTape;
using infer::testing::DTensor;
using infer::testing::gradient_check;
using infer::testing::random_parameter;
using infer::testing::random_projection;
namespace ad = infer::ad;

constexpr double kGradTol = 1e-4;
constexpr int kSeeds = 20;

// Values spaced 0.01 apart in random order, so no perturbation of 1e-4 flips a max.
DTensor separated_parameter(const ad::Shape& shape, std::mt19937_64& rng) {
  std::vector<double> v(ad::numel(shape));
  std::iota(v.begin(), v.end(), 0.0);
  std::shuffle(v.begin(), v.end(), rng);
  for (auto& x : v) {
    x = 0.01 * x - 0.005 * static_cast<double>(v.size());
  }
  return DTensor::parameter(shape, std::move(v));
}

TEST(Conv2d, IdentityKernel) {
  DTape tape;
  std::mt19937_64 rng(1);
  const auto x = DTensor::constant({1, 2, 4, 4}, infer::testing::uniform_values(32, rng));
  const auto w = DTensor::constant({2, 2, 1, 1}, {1, 0, 0, 1});
  const auto y = ad::conv2d(tape, x, w, DTensor{});
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_DOUBLE_EQ(y.value()[i], x.value()[i]);
  }
}

TEST(Conv2d, OnesKernelSumsNeighbourhood) {
  DTape tape;
  const auto x = DTensor::constant({1, 1, 5, 5}, std::vector<double>(25, 1.0));
  const auto w = DTensor::constant({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  const auto y = ad::conv2d(tape, x, w, DTensor{}, 1, 1);
  EXPECT_DOUBLE_EQ(y.value()[2 * 5 + 2], 9.0);
  EXPECT_DOUBLE_EQ(y.value()[0], 4.0);
  EXPECT_DOUBLE_EQ(y.value()[2], 6.0);
}

TEST(Conv2d, RejectsChannelMismatchNamingDims) {
  DTape tape;
  const auto x = DTensor::zeros({1, 3, 4, 4});
  const auto w = DTensor::zeros({2, 4, 3, 3});
  try {
    (void)ad::conv2d(tape, x, w, DTensor{}, 1, 1);
    FAIL() << "expected ShapeError";
  } catch (const ad::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('4'), std::string::npos);
  }
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(100 + seed);
    auto x = random_parameter({2, 3, 5, 5}, rng);
    auto w = random_parameter({4, 3, 3, 3}, rng);
    auto b = random_parameter({4}, rng);
    const std::size_t stride = seed % 2 == 0 ? 1 : 2;
    const double err = gradient_check({x, w, b}, [&](DTape& tape) {
      return random_projection(tape, ad::conv2d(tape, x, w, b, stride, 1), 7);
    });
    EXPECT_LT(err, kGradTol) << "seed " << seed;
  }
}

TEST(MaxPool2, ConstantInputTieBreak) {
  DTape tape;
  auto x = DTensor::parameter({1, 1, 4, 4}, std::vector<double>(16, 2.0));
  const auto y = ad::maxpool2(tape, x);
  ASSERT_EQ(y.shape(), (ad::Shape{1, 1, 2, 2}));
  for (const double v : y.value()) {
    EXPECT_DOUBLE_EQ(v, 2.0);
  }
  tape.backward(ad::sum(tape, y));
  const auto g = x.grad();
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_DOUBLE_EQ(g[r * 4 + c], (r % 2 == 0 && c % 2 == 0) ? 1.0 : 0.0);
    }
  }
}

TEST(MaxPool2, SingleLargeElementSurvives) {
  DTape tape;
  std::vector<double> v(64, 0.0);
  v[5 * 8 + 3] = 7.0;
  const auto y = ad::maxpool2(tape, DTensor::constant({1, 1, 8, 8}, v));
  EXPECT_DOUBLE_EQ(y.value()[2 * 4 + 1], 7.0);
  EXPECT_DOUBLE_EQ(std::accumulate(y.value().begin(), y.value().end(), 0.0), 7.0);
}

TEST(MaxPool2, OddDimsRejected) {
  DTape tape;
  EXPECT_THROW((void)ad::maxpool2(tape, DTensor::zeros({1, 1, 5, 4})), ad::ShapeError);
}

TEST(MaxPool2, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(200 + seed);
    auto x = separated_parameter({1, 4, 8, 8}, rng);
    const double err = gradient_check(
        {x}, [&](DTape& tape) { return random_projection(tape, ad::maxpool2(tape, x), seed); });
    EXPECT_LT(err, kGradTol) << "seed " << seed;
  }
}

ad::ConvLstmWeights<double> random_lstm(std::size_t in, std::size_t filters, std::mt19937_64& rng) {
  return {random_parameter({4 * filters, in, 3, 3}, rng, 0.3), random_parameter({4 * filters, filters, 3, 3}, rng, 0.3),
          random_parameter({4 * filters}, rng, 0.3)};
}

TEST(ConvLstm, ZeroWeightsGiveZeroState) {
  DTape tape;
  std::mt19937_64 rng(3);
  const ad::ConvLstmWeights<double> w{DTensor::zeros({8, 3, 3, 3}), DTensor::zeros({8, 2, 3, 3}), DTensor::zeros({8})};
  const auto x = DTensor::constant({1, 3, 6, 6}, infer::testing::uniform_values(108, rng));
  const auto s = ad::conv_lstm_step(tape, x, ad::zero_lstm_state<double>(1, 2, 6, 6), w);
  for (const double v : s.hidden.value()) {
    EXPECT_EQ(v, 0.0);
  }
  for (const double v : s.cell.value()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(ConvLstm, SaturatedForgetGateKeepsCell) {
  DTape tape;
  std::mt19937_64 rng(4);
  const std::size_t f = 3;
  std::vector<double> bias(4 * f, 0.0);
  for (std::size_t k = f; k < 2 * f; ++k) {
    bias[k] = 20.0;
  }
  const ad::ConvLstmWeights<double> w{DTensor::zeros({4 * f, 2, 3, 3}), DTensor::zeros({4 * f, f, 3, 3}),
                                      DTensor::constant({4 * f}, bias)};
  const auto x = DTensor::constant({1, 2, 5, 5}, infer::testing::uniform_values(50, rng));
  const ad::ConvLstmState<double> state{DTensor::constant({1, f, 5, 5}, infer::testing::uniform_values(75, rng)),
                                        DTensor::constant({1, f, 5, 5}, infer::testing::uniform_values(75, rng))};
  const auto next = ad::conv_lstm_step(tape, x, state, w);
  for (std::size_t i = 0; i < next.cell.numel(); ++i) {
    EXPECT_NEAR(next.cell.value()[i], state.cell.value()[i], 1e-6);
  }
}

TEST(ConvLstm, RejectsSpatialMismatch) {
  DTape tape;
  std::mt19937_64 rng(5);
  const auto w = random_lstm(2, 4, rng);
  EXPECT_THROW((void)ad::conv_lstm_step(tape, DTensor::zeros({1, 2, 6, 6}), ad::zero_lstm_state<double>(1, 4, 5, 6), w),
               ad::ShapeError);
}

TEST(ConvLstm, ThreeStepChainGradient) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(300 + seed);
    auto w = random_lstm(2, 4, rng);
    std::vector<DTensor> xs;
    for (int t = 0; t < 3; ++t) {
      xs.push_back(random_parameter({1, 2, 6, 6}, rng));
    }
    auto h0 = random_parameter({1, 4, 6, 6}, rng, 0.5);
    auto c0 = random_parameter({1, 4, 6, 6}, rng, 0.5);
    std::vector<DTensor> inputs{w.input_weight, w.hidden_weight, w.bias, h0, c0};
    inputs.insert(inputs.end(), xs.begin(), xs.end());
    const double err = gradient_check(inputs, [&](DTape& tape) {
      ad::ConvLstmState<double> s{h0, c0};
      for (const auto& x : xs) {
        s = ad::conv_lstm_step(tape, x, s, w);
      }
      return ad::add(tape, random_projection(tape, s.hidden, 11), random_projection(tape, s.cell, 12));
    });
    EXPECT_LT(err, kGradTol) << "seed " << seed;
  }
}

TEST(BilinearUp2, ConstantAndLinearField) {
  DTape tape;
  const auto c = ad::bilinear_up2(tape, DTensor::constant({1, 1, 3, 3}, std::vector<double>(9, 0.4)));
  ASSERT_EQ(c.shape(), (ad::Shape{1, 1, 6, 6}));
  for (const double v : c.value()) {
    EXPECT_NEAR(v, 0.4, 1e-15);
  }
  const std::size_t n = 5;
  std::vector<double> field(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t col = 0; col < n; ++col) {
      field[r * n + col] = 2.0 * static_cast<double>(r) - 0.5 * static_cast<double>(col) + 1.0;
    }
  }
  const auto up = ad::bilinear_up2(tape, DTensor::constant({1, 1, n, n}, field));
  const double step = static_cast<double>(n - 1) / static_cast<double>(2 * n - 1);
  for (std::size_t r = 0; r < 2 * n; ++r) {
    for (std::size_t col = 0; col < 2 * n; ++col) {
      const double expected = 2.0 * step * static_cast<double>(r) - 0.5 * step * static_cast<double>(col) + 1.0;
      EXPECT_NEAR(up.value()[r * 2 * n + col], expected, 1e-12);
    }
  }
}

TEST(BilinearUp2, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(400 + seed);
    auto x = random_parameter({2, 3, 4, 5}, rng);
    const double err = gradient_check(
        {x}, [&](DTape& tape) { return random_projection(tape, ad::bilinear_up2(tape, x), seed); });
    EXPECT_LT(err, kGradTol) << "seed " << seed;
  }
}

TEST(MseLoss, Examples) {
  DTape tape;
  std::mt19937_64 rng(6);
  const auto v = infer::testing::uniform_values(24, rng);
  const auto a = DTensor::constant({1, 2, 3, 4}, v);
  EXPECT_DOUBLE_EQ(ad::mse_loss(tape, a, a).item(), 0.0);
  auto shifted = v;
  for (auto& x : shifted) {
    x += 0.3;
  }
  EXPECT_NEAR(ad::mse_loss(tape, DTensor::constant({1, 2, 3, 4}, shifted), a).item(), 0.09, 1e-12);
  EXPECT_THROW((void)ad::mse_loss(tape, a, DTensor::zeros({1, 2, 4, 3})), ad::ShapeError);
}

TEST(MseLoss, GradientIsScaledResidual) {
  std::mt19937_64 rng(7);
  auto pred = random_parameter({1, 1, 4, 4}, rng);
  const auto gt = DTensor::constant({1, 1, 4, 4}, infer::testing::uniform_values(16, rng));
  DTape tape;
  tape.backward(ad::mse_loss(tape, pred, gt));
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(pred.grad()[i], 2.0 * (pred.value()[i] - gt.value()[i]) / 16.0, 1e-15);
  }
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 r(500 + seed);
    auto p = random_parameter({2, 2, 3, 3}, r);
    const auto g = DTensor::constant({2, 2, 3, 3}, infer::testing::uniform_values(36, r));
    EXPECT_LT(gradient_check({p}, [&](DTape& t) { return ad::mse_loss(t, p, g); }), kGradTol) << "seed " << seed;
  }
}

TEST(SafetyLoss, Examples) {
  DTape tape;
  std::vector<double> pred(16, 0.0);
  std::vector<double> mask(16, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    pred[i] = 0.7;
    mask[8 + i] = 1.0;
  }
  EXPECT_DOUBLE_EQ(ad::safety_loss(tape, DTensor::constant({1, 1, 4, 4}, pred), DTensor::constant({1, 1, 4, 4}, mask))
                       .item(),
                   0.0);
  const auto ones = DTensor::constant({1, 1, 5, 5}, std::vector<double>(25, 1.0));
  EXPECT_NEAR(ad::safety_loss(tape, ones, ones).item(), 5.0, 1e-12);
  auto neg = mask;
  neg[0] = -1.0;
  EXPECT_THROW((void)ad::safety_loss(tape, DTensor::constant({1, 1, 4, 4}, pred), DTensor::constant({1, 1, 4, 4}, neg)),
               std::invalid_argument);
}

TEST(SafetyLoss, GradientOnlyInsideObstacles) {
  std::mt19937_64 rng(8);
  auto pred = random_parameter({1, 1, 6, 6}, rng);
  std::vector<double> mask(36, 0.0);
  for (std::size_t i = 0; i < 36; i += 3) {
    mask[i] = 1.0;
  }
  const auto m = DTensor::constant({1, 1, 6, 6}, mask);
  DTape tape;
  tape.backward(ad::safety_loss(tape, pred, m));
  for (std::size_t i = 0; i < 36; ++i) {
    if (mask[i] == 0.0) {
      EXPECT_EQ(pred.grad()[i], 0.0);
    }
  }
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 r(600 + seed);
    auto p = random_parameter({1, 2, 4, 4}, r);
    const auto mk = DTensor::constant({1, 2, 4, 4}, infer::testing::uniform_values(32, r, 0.0, 1.0));
    EXPECT_LT(gradient_check({p}, [&](DTape& t) { return ad::safety_loss(t, p, mk); }), kGradTol) << "seed " << seed;
  }
}

TEST(ElementwiseOps, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(700 + seed);
    auto a = random_parameter({1, 3, 3, 3}, rng);
    auto b = random_parameter({1, 2, 3, 3}, rng);
    // keep relu inputs away from the kink
    for (auto& v : a.mutable_value()) {
      v = v < 0 ? v - 0.01 : v + 0.01;
    }
    const double err = gradient_check({a, b}, [&](DTape& t) {
      const auto cat = ad::concat_channels(t, {ad::relu(t, a), ad::sigmoid(t, b)});
      const auto head = ad::slice_channels(t, cat, 1, 3);
      const auto tail = ad::slice_channels(t, cat, 2, 3);
      const auto mixed = ad::add(t, ad::mul(t, ad::tanh(t, head), tail), ad::scale(t, head, 0.5));
      return random_projection(t, mixed, seed);
    });
    EXPECT_LT(err, kGradTol) << "seed " << seed;
  }
}

TEST(Tape, AccumulatesAcrossConsumers) {
  std::mt19937_64 rng(9);
  auto x = random_parameter({1, 2, 3, 3}, rng);
  auto y = random_parameter({1, 2, 3, 3}, rng);
  {
    DTape tape;
    const auto s = ad::add(tape, ad::add(tape, x, x), ad::mul(tape, x, y));
    tape.backward(random_projection(tape, s, 3));
  }
  const std::vector<double> split(x.grad().begin(), x.grad().end());
  x.zero_grad();
  y.zero_grad();
  {
    DTape tape;
    const auto two = DTensor::constant(y.shape(), std::vector<double>(y.numel(), 2.0));
    const auto fused = ad::mul(tape, x, ad::add(tape, detach(y), two));
    tape.backward(random_projection(tape, fused, 3));
  }
  for (std::size_t i = 0; i < split.size(); ++i) {
    EXPECT_NEAR(split[i], x.grad()[i], 1e-14);
  }
}

TEST(Tape, VisitsEveryNodeOnce) {
  std::mt19937_64 rng(10);
  auto x = random_parameter({1, 2, 4, 4}, rng);
  auto w = random_parameter({2, 2, 3, 3}, rng);
  DTape tape;
  auto h = x;
  for (int i = 0; i < 4; ++i) {
    h = ad::relu(tape, ad::conv2d(tape, h, w, DTensor{}, 1, 1));
  }
  const auto loss = ad::sum(tape, ad::add(tape, h, x));
  tape.backward(loss);
  EXPECT_EQ(tape.last_visit_count(), tape.size());
}

TEST(Tape, ReplayIsBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(77);
    auto w = random_lstm(2, 3, rng);
    const auto x = random_parameter({1, 2, 5, 5}, rng);
    ad::Tape<double> tape;
    auto s = ad::zero_lstm_state<double>(1, 3, 5, 5);
    for (int i = 0; i < 2; ++i) {
      s = ad::conv_lstm_step(tape, x, s, w);
    }
    tape.backward(ad::sum(tape, s.hidden));
    std::vector<double> out(s.hidden.value().begin(), s.hidden.value().end());
    out.insert(out.end(), w.input_weight.grad().begin(), w.input_weight.grad().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Tape, FloatModeMatchesDoubleForward) {
  std::mt19937_64 rng(12);
  const auto xv = infer::testing::uniform_values(2 * 3 * 6 * 6, rng);
  const auto wv = infer::testing::uniform_values(4 * 3 * 9, rng);
  ad::Tape<float> tf;
  DTape td;
  const auto yf = ad::conv2d(tf, ad::Tensor<float>::constant({2, 3, 6, 6}, {xv.begin(), xv.end()}),
                             ad::Tensor<float>::constant({4, 3, 3, 3}, {wv.begin(), wv.end()}), ad::Tensor<float>{}, 1, 1);
  const auto yd = ad::conv2d(td, DTensor::constant({2, 3, 6, 6}, xv), DTensor::constant({4, 3, 3, 3}, wv), DTensor{}, 1, 1);
  for (std::size_t i = 0; i < yd.numel(); ++i) {
    EXPECT_NEAR(yf.value()[i], yd.value()[i], 1e-5);
  }
}

ad::ParameterList<double> gradient_list(const std::vector<std::vector<double>>& grads) {
  ad::ParameterList<double> params;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto t = DTensor::parameter({grads[k].size()}, std::vector<double>(grads[k].size(), 0.0));
    std::copy(grads[k].begin(), grads[k].end(), t.mutable_grad().begin());
    params.push_back({"p" + std::to_string(k), t});
  }
  return params;
}

TEST(ClipGlobalNorm, Examples) {
  auto small = gradient_list({{3.0}, {4.0}});
  EXPECT_DOUBLE_EQ(ad::clip_global_norm(small, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(small[0].tensor.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(small[1].tensor.grad()[0], 4.0);

  auto big = gradient_list({{12.0, 0.0}, {16.0}});
  EXPECT_DOUBLE_EQ(ad::clip_global_norm(big, 10.0), 20.0);
  EXPECT_NEAR(big[0].tensor.grad()[0], 6.0, 1e-12);
  EXPECT_NEAR(big[1].tensor.grad()[0], 8.0, 1e-12);
  EXPECT_NEAR(ad::global_grad_norm(big), 10.0, 1e-6);

  auto zero = gradient_list({{0.0, 0.0}});
  EXPECT_DOUBLE_EQ(ad::clip_global_norm(zero, 10.0), 0.0);
  EXPECT_EQ(zero[0].tensor.grad()[0], 0.0);
  EXPECT_THROW((void)ad::clip_global_norm(zero, 0.0), std::invalid_argument);
}

TEST(ClipGlobalNorm, NeverIncreasesNormAndKeepsDirection) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> scale(0.01, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double s = scale(rng);
    auto params = gradient_list({infer::testing::uniform_values(7, rng, -s, s), infer::testing::uniform_values(3, rng, -s, s)});
    std::vector<double> before;
    for (const auto& p : params) {
      before.insert(before.end(), p.tensor.grad().begin(), p.tensor.grad().end());
    }
    const double n0 = ad::clip_global_norm(params, 10.0);
    const double n1 = ad::global_grad_norm(params);
    EXPECT_LE(n1, n0 + 1e-12);
    std::vector<double> after;
    for (const auto& p : params) {
      after.insert(after.end(), p.tensor.grad().begin(), p.tensor.grad().end());
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      dot += before[i] * after[i];
    }
    EXPECT_NEAR(dot / (n0 * n1), 1.0, 1e-12);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ad::ParameterList<double> params{{"w", DTensor::parameter({3}, {1.0, -2.0, 0.5})}};
  (void)params[0].tensor.mutable_grad();
  auto state = ad::make_adam_state(params);
  ad::adam_step(params, state);
  EXPECT_EQ(state.step, 1U);
  EXPECT_DOUBLE_EQ(params[0].tensor.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(params[0].tensor.value()[1], -2.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ad::ParameterList<double> params{{"w", DTensor::parameter({3}, {1.0, -2.0, 0.5})}};
  const std::vector<double> g{0.3, -4.0, 1e-2};
  std::copy(g.begin(), g.end(), params[0].tensor.mutable_grad().begin());
  auto state = ad::make_adam_state(params);
  ad::adam_step(params, state);
  // m_hat = g and v_hat = g^2 at t = 1, so each entry moves by lr * |g| / (|g| + eps)
  const double lr = state.config.learning_rate;
  const std::vector<double> start{1.0, -2.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    const double expected = lr * std::abs(g[i]) / (std::abs(g[i]) + state.config.epsilon);
    EXPECT_NEAR(start[i] - params[0].tensor.value()[i], std::copysign(expected, g[i]), 1e-15);
  }
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  std::mt19937_64 rng(14);
  ad::ParameterList<double> params{{"w", random_parameter({5}, rng)}};
  auto state = ad::make_adam_state(params, ad::AdamConfig{.learning_rate = 1e-2});
  for (int i = 0; i < 5000; ++i) {
    params[0].tensor.zero_grad();
    DTape tape;
    tape.backward(ad::sum(tape, ad::mul(tape, params[0].tensor, params[0].tensor)));
    ad::adam_step(params, state);
  }
  double norm = 0.0;
  for (const double v : params[0].tensor.value()) {
    norm += v * v;
  }
  EXPECT_LT(std::sqrt(norm), 1e-3);
}

TEST(Adam, NonFiniteGradientAbortsStep) {
  ad::ParameterList<double> params{{"encoder.0.weight", DTensor::parameter({2}, {1.0, 1.0})},
                                   {"head.weight", DTensor::parameter({2}, {1.0, 1.0})}};
  params[0].tensor.mutable_grad()[0] = 0.5;
  params[1].tensor.mutable_grad()[1] = std::numeric_limits<double>::quiet_NaN();
  auto state = ad::make_adam_state(params);
  try {
    ad::adam_step(params, state);
    FAIL() << "expected NonFiniteGradient";
  } catch (const ad::NonFiniteGradient& e) {
    EXPECT_EQ(e.parameter(), "head.weight");
  }
  EXPECT_EQ(state.step, 0U);
  EXPECT_DOUBLE_EQ(params[0].tensor.value()[0], 1.0);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  ad::Checkpoint ckpt;
  ckpt.metadata["variant"] = "infer";
  ckpt.metadata["epoch"] = "3";
  ckpt.parameters.push_back({"conv.weight", {2, 1, 1, 1}, {0.5F, -1.25F}});
  ckpt.parameters.push_back({"conv.bias", {2}, {0.0F, 3.0F}});
  const auto bytes = ad::encode_checkpoint(ckpt);
  const auto back = ad::decode_checkpoint(bytes);
  EXPECT_EQ(back.metadata, ckpt.metadata);
  ASSERT_EQ(back.parameters.size(), 2U);
  EXPECT_EQ(back.parameters[0].name, "conv.weight");
  EXPECT_EQ(back.parameters[0].shape, (ad::Shape{2, 1, 1, 1}));
  EXPECT_EQ(back.parameters[1].data, (std::vector<float>{0.0F, 3.0F}));

  auto flipped = bytes;
  flipped[bytes.size() - 12] ^= 0x01U;
  EXPECT_THROW((void)ad::decode_checkpoint(flipped), ad::CheckpointError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW((void)ad::decode_checkpoint(version), ad::CheckpointError);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW((void)ad::decode_checkpoint(truncated), ad::CheckpointError);

  const auto path = std::filesystem::temp_directory_path() / "infer_ckpt_test.bin";
  const auto checksum = ad::write_checkpoint(path, ckpt);
  EXPECT_EQ(ad::checkpoint_hash(path), ad::hex64(checksum));
  EXPECT_EQ(ad::checkpoint_hash(path).size(), 16U);
  std::filesystem::remove(path);
}

}  // namespace
