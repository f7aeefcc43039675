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

// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by id (e.g. `acceptance AC2 AC7`); the exit status is nonzero when
// any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dense_markov.hpp"
#include "gradcheck.hpp"
#include "infer/autodiff/ops.hpp"
#include "infer/evalkit/evaluate.hpp"
#include "infer/evalkit/metrics.hpp"
#include "infer/forecaster/model.hpp"
#include "infer/forecaster/rollout.hpp"
#include "infer/forecaster/train.hpp"
#include "infer/gridcore/grid.hpp"
#include "infer/markov/bayes_filter.hpp"
#include "infer/synthgen/dataset.hpp"
#include "infer/synthgen/generator.hpp"

namespace {

namespace fs = std::filesystem;
namespace ad = infer::ad;
namespace grid = infer::grid;
namespace forecast = infer::forecast;
namespace synth = infer::synth;
namespace eval = infer::eval;
using infer::testing::DTape;
using infer::testing::DTensor;
using infer::testing::gradient_check;
using infer::testing::random_parameter;
using infer::testing::random_projection;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// AC1: finite-difference gradient checks.

constexpr int kGradSeeds = 20;
constexpr double kOpTolerance = 1e-4;
constexpr double kModelTolerance = 1e-3;

DTensor separated_parameter(const ad::Shape& shape, std::mt19937_64& rng) {
  std::vector<double> v(ad::numel(shape));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = 0.01 * static_cast<double>(i) - 0.005 * static_cast<double>(v.size());
  }
  std::shuffle(v.begin(), v.end(), rng);
  return DTensor::parameter(shape, std::move(v));
}

grid::FrameStack random_frame(const grid::GridSpec& spec, std::mt19937_64& rng) {
  auto f = grid::make_empty_frame(spec, 0.0, {});
  std::bernoulli_distribution on(0.3);
  for (auto& ch : f.channels) {
    for (auto& v : ch.values()) {
      v = on(rng) ? 1.0F : 0.0F;
    }
  }
  return f;
}

Outcome ac1_gradients() {
  const Stopwatch clock;
  std::vector<std::pair<std::string, std::function<double(std::mt19937_64&)>>> ops;
  ops.emplace_back("conv2d", [](std::mt19937_64& rng) {
    auto x = random_parameter({2, 3, 5, 5}, rng);
    auto w = random_parameter({4, 3, 3, 3}, rng);
    auto b = random_parameter({4}, rng);
    return gradient_check({x, w, b}, [&](DTape& t) { return random_projection(t, ad::conv2d(t, x, w, b, 1, 1), 3); });
  });
  ops.emplace_back("maxpool2", [](std::mt19937_64& rng) {
    auto x = separated_parameter({1, 2, 6, 6}, rng);
    return gradient_check({x}, [&](DTape& t) { return random_projection(t, ad::maxpool2(t, x), 5); });
  });
  ops.emplace_back("conv_lstm_step x3", [](std::mt19937_64& rng) {
    const ad::ConvLstmWeights<double> w{random_parameter({16, 2, 3, 3}, rng, 0.3),
                                        random_parameter({16, 4, 3, 3}, rng, 0.3), random_parameter({16}, rng, 0.3)};
    std::vector<DTensor> xs;
    for (int k = 0; k < 3; ++k) {
      xs.push_back(random_parameter({1, 2, 5, 5}, rng));
    }
    auto h0 = random_parameter({1, 4, 5, 5}, rng, 0.5);
    auto c0 = random_parameter({1, 4, 5, 5}, rng, 0.5);
    std::vector<DTensor> inputs{w.input_weight, w.hidden_weight, w.bias, h0, c0};
    inputs.insert(inputs.end(), xs.begin(), xs.end());
    return gradient_check(inputs, [&](DTape& t) {
      ad::ConvLstmState<double> s{h0, c0};
      for (const auto& x : xs) {
        s = ad::conv_lstm_step(t, x, s, w);
      }
      return ad::add(t, random_projection(t, s.hidden, 7), random_projection(t, s.cell, 8));
    });
  });
  ops.emplace_back("bilinear_up2", [](std::mt19937_64& rng) {
    auto x = random_parameter({1, 3, 4, 5}, rng);
    return gradient_check({x}, [&](DTape& t) { return random_projection(t, ad::bilinear_up2(t, x), 9); });
  });
  ops.emplace_back("mse_loss", [](std::mt19937_64& rng) {
    auto p = random_parameter({1, 1, 6, 6}, rng);
    const auto g = DTensor::constant({1, 1, 6, 6}, infer::testing::uniform_values(36, rng, 0.0, 1.0));
    return gradient_check({p}, [&](DTape& t) { return ad::mse_loss(t, p, g); });
  });
  ops.emplace_back("safety_loss", [](std::mt19937_64& rng) {
    auto p = random_parameter({1, 1, 6, 6}, rng);
    std::bernoulli_distribution on(0.4);
    std::vector<double> mask(36);
    for (auto& m : mask) {
      m = on(rng) ? 1.0 : 0.0;
    }
    mask[0] = 1.0;
    const auto mk = DTensor::constant({1, 1, 6, 6}, mask);
    return gradient_check({p}, [&](DTape& t) { return ad::safety_loss(t, p, mk); });
  });

  bool ok = true;
  std::ostringstream detail;
  for (const auto& [name, check] : ops) {
    double worst = 0.0;
    for (int seed = 0; seed < kGradSeeds; ++seed) {
      std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(seed));
      worst = std::max(worst, check(rng));
    }
    ok = ok && worst < kOpTolerance;
    detail << name << " " << fmt("%.1e", worst) << "; ";
  }

  forecast::ModelConfig c;
  c.input_side = 8;
  c.encoder_channels = {3, 4};
  c.pooled_blocks = 2;
  c.lstm_filters = 3;
  c.decoder_out_channels = 2;
  c.precondition_frames = 2;
  c.bptt_window = 2;
  c.lambda_safe = 0.3;
  const grid::GridSpec spec{8, 1.0};
  std::mt19937_64 rng(77);
  forecast::TrainingTrajectory traj;
  traj.id = "micro";
  for (int k = 0; k < 3; ++k) {
    traj.frames.push_back(random_frame(spec, rng));
    const grid::MetricPoint p{0.4, 2.0 + k};
    traj.target_positions.push_back(p);
    traj.targets.push_back(grid::render_gaussian_target(p, 1.0, spec).grid);
  }
  double model_worst = 0.0;
  for (const auto variant : {forecast::Variant::kInferSkip, forecast::Variant::kInfer}) {
    c.variant = variant;
    const forecast::Model<double> m(c, 11);
    std::vector<DTensor> params;
    for (const auto& p : m.parameters()) {
      params.push_back(p.tensor);
    }
    model_worst = std::max(model_worst, gradient_check(
                                            params,
                                            [&](DTape& tape) {
                                              auto state = m.zero_state();
                                              grid::FrameStack input = traj.frames[0];
                                              return forecast::window_loss(tape, m, traj, 1, 2, false, state, input);
                                            },
                                            1e-6));
  }
  ok = ok && model_worst < kModelTolerance;
  const double secs = clock.seconds();
  ok = ok && secs < 120.0;
  detail << "full model " << fmt("%.1e", model_worst) << "; " << fmt("%.1f s", secs);
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------
// AC2: Bayes filter against a dense transition matrix.

Outcome ac2_bayes_oracle() {
  const Stopwatch clock;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> vel(-3.0, 3.0);
  std::uniform_real_distribution<double> sig(0.0, 1.5);
  double worst = 0.0;
  int cases = 0;
  for (const std::size_t n : {std::size_t{16}, std::size_t{32}}) {
    for (int trial = 0; trial < 25; ++trial, ++cases) {
      infer::markov::Belief b{grid::GridSpec{n, 0.5}, std::vector<double>(n * n)};
      double total = 0.0;
      for (auto& p : b.probabilities) {
        p = u(rng);
        total += p;
      }
      for (auto& p : b.probabilities) {
        p /= total;
      }
      b.vx = vel(rng);
      b.vz = vel(rng);
      const double sigma = trial % 5 == 0 ? 0.0 : sig(rng);
      const Eigen::MatrixXd t = infer::testing::dense_transition(n, b.vx, b.vz, sigma);
      Eigen::VectorXd p = t * Eigen::Map<const Eigen::VectorXd>(b.probabilities.data(), static_cast<Eigen::Index>(n * n));
      p /= p.sum();
      const auto next = infer::markov::predict(b, sigma);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        worst = std::max(worst, std::abs(next.probabilities[static_cast<std::size_t>(i)] - p(i)));
      }
    }
  }
  const double secs = clock.seconds();
  return {worst < 1e-10 && secs < 60.0,
          std::to_string(cases) + " cases, max deviation " + fmt("%.1e", worst) + ", " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------
// AC3: Markov baseline on constant-velocity and turning tracks.

struct Track {
  std::vector<grid::MetricPoint> points;
};

Track arc_track(double heading, double speed, double radius, int frames) {
  Track t;
  for (int k = 0; k < frames; ++k) {
    const double s = speed * k;
    double along = s;
    double across = 0.0;
    if (radius > 0.0) {
      along = radius * std::sin(s / radius);
      across = radius * (1.0 - std::cos(s / radius));
    }
    t.points.push_back({across * std::cos(heading) + along * std::sin(heading),
                        1.0 + along * std::cos(heading) - across * std::sin(heading)});
  }
  return t;
}

std::vector<double> baseline_step_errors(const Track& t, std::size_t observed, const grid::GridSpec& spec) {
  const auto res = infer::markov::run_baseline(std::span(t.points).first(observed), spec, t.points.size() - observed);
  std::vector<double> e;
  for (std::size_t k = 0; k < res.positions.size(); ++k) {
    const auto& truth = t.points[observed + k];
    e.push_back(std::hypot(res.positions[k].x - truth.x, res.positions[k].z - truth.z));
  }
  return e;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) {
    s += x;
  }
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

Outcome ac3_markov_sanity() {
  const grid::GridSpec spec{256, 0.25};
  constexpr int kObserved = 20;
  constexpr int kFrames = kObserved + 40;  // 4 s at 10 fps
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> speed(0.5, 0.9);     // metres per frame
  std::uniform_real_distribution<double> heading(-0.1, 0.1);  // radians off the forward axis
  double worst = 0.0;
  std::size_t degraded = 0;
  std::size_t pairs = 0;
  double straight_sum = 0.0;
  double turning_sum = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double v = speed(rng);
    const double h = heading(rng);
    const auto straight = baseline_step_errors(arc_track(h, v, 0.0, kFrames), kObserved, spec);
    worst = std::max(worst, *std::max_element(straight.begin(), straight.end()));
    for (const double radius : {25.0, 40.0}) {
      const auto turning = baseline_step_errors(arc_track(h, v, radius, kFrames), kObserved, spec);
      ++pairs;
      degraded += mean_of(turning) > mean_of(straight) ? 1 : 0;
      turning_sum += mean_of(turning);
    }
    straight_sum += mean_of(straight);
  }
  const bool ok = worst <= spec.resolution() && degraded == pairs;
  return {ok, "max straight step error " + fmt("%.3f m", worst) + " (limit 0.25), mean 4 s ADE straight " +
                  fmt("%.3f m", straight_sum / 10.0) + " vs turning " +
                  fmt("%.3f m", turning_sum / static_cast<double>(pairs)) + ", " + std::to_string(degraded) + "/" +
                  std::to_string(pairs) + " turning tracks worse"};
}

// ---------------------------------------------------------------------------
// AC4 / AC5: overfitting the micro configuration and the mirrored evaluation.

struct OverfitRun {
  std::vector<synth::Scenario> scenarios;
  std::unique_ptr<forecast::Model<float>> model;
  bool trained = false;
};

OverfitRun& overfit_run() {
  static OverfitRun run;
  return run;
}

constexpr std::size_t kOverfitTrajectories = 8;
constexpr std::uint64_t kOverfitSeed = 1;

std::vector<forecast::TrainingTrajectory> overfit_set(const forecast::ModelConfig& mc) {
  auto& run = overfit_run();
  std::vector<forecast::TrainingTrajectory> set;
  for (std::size_t i = 0; i < kOverfitTrajectories; ++i) {
    if (run.scenarios.size() <= i) {
      synth::GeneratorConfig g;
      g.family = static_cast<synth::RoadFamily>(i % 5);
      g.render_spec = grid::GridSpec{128, 0.5};
      run.scenarios.push_back(synth::generate_scenario(g, 100 + i));
    }
    set.push_back(forecast::prepare_trajectory(synth::to_scenario_data(run.scenarios[i], "train" + std::to_string(i)), mc));
  }
  return set;
}

forecast::TrainConfig overfit_train_config() {
  forecast::TrainConfig tc;
  tc.epochs = 500;
  tc.learning_rate = 1e-4;
  tc.max_predicted_frames = 10;
  tc.ade_horizon = 10;
  tc.ade_every = 1;
  tc.early_stop_ade_cells = 2.0;
  return tc;
}

Outcome ac4_overfit() {
  const Stopwatch clock;
  auto mc = forecast::ModelConfig::micro();
  mc.variant = forecast::Variant::kInferSkip;
  const auto set = overfit_set(mc);
  const double cell = set.front().frames.front().spec().resolution();

  auto model = std::make_unique<forecast::Model<float>>(mc, kOverfitSeed);
  auto opt = ad::make_adam_state(model->parameters());
  const auto tc = overfit_train_config();
  const auto result = forecast::train<float>(*model, opt, set, {}, tc);
  const auto& last = result.curve.back();
  const double train_secs = clock.seconds();

  // Determinism: two short runs from the same seed agree bit for bit with each
  // other and with the opening epochs of the long run.
  auto short_tc = tc;
  short_tc.epochs = 2;
  short_tc.ade_every = 0;
  std::vector<std::vector<ad::StoredParameter>> finals;
  bool curves_match = true;
  for (int rep = 0; rep < 2; ++rep) {
    forecast::Model<float> m(mc, kOverfitSeed);
    auto o = ad::make_adam_state(m.parameters());
    const auto r = forecast::train<float>(m, o, set, {}, short_tc);
    for (std::size_t e = 0; e < r.curve.size() && e < result.curve.size(); ++e) {
      curves_match = curves_match && r.curve[e].train_loss == result.curve[e].train_loss;
    }
    finals.push_back(m.export_parameters());
  }
  bool params_match = finals[0].size() == finals[1].size();
  for (std::size_t i = 0; params_match && i < finals[0].size(); ++i) {
    params_match = finals[0][i].data == finals[1][i].data;
  }

  overfit_run().model = std::move(model);
  overfit_run().trained = true;
  const double ade_cells = last.train_ade_m / cell;
  const bool ok = std::isfinite(ade_cells) && ade_cells < 2.0 && last.epoch < 500 && train_secs < 900.0 &&
                  curves_match && params_match;
  return {ok, "train ADE " + fmt("%.2f coarse cells", ade_cells) + " after " + std::to_string(last.epoch + 1) +
                  " epochs, " + fmt("%.0f s", train_secs) + ", deterministic " +
                  (curves_match && params_match ? "yes" : "no")};
}

Outcome ac5_mirrored() {
  auto& run = overfit_run();
  if (!run.trained) {
    (void)ac4_overfit();
  }
  const auto& model = *run.model;
  const auto reflected = forecast::reflect_model_rows(model);
  const auto& scenarios = run.scenarios;
  eval::EvalOptions opts;
  opts.horizons_s = {1.0, 2.0, 3.0, 4.0};

  auto source = [&](bool mirrored) {
    return eval::ScenarioSource{scenarios.size(), [&, mirrored](std::size_t i) {
                                  const auto s = mirrored ? synth::mirror_scenario(scenarios[i]) : scenarios[i];
                                  return synth::to_scenario_data(s, "scenario" + std::to_string(i));
                                }};
  };
  const auto method = eval::Method::forecaster(model, "overfit");
  const auto original = eval::evaluate(method, source(false), opts);
  const auto mirrored = eval::evaluate(method, source(true), opts);

  const double cell = forecast::model_spec_for(grid::GridSpec{128, 0.5}, model.config().input_side).resolution();
  double worst = 0.0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto on_mirror =
        eval::predict_scenario(method, synth::to_scenario_data(synth::mirror_scenario(scenarios[i]), "m"), opts);
    const auto on_original = eval::predict_scenario(eval::Method::forecaster(reflected, "reflected"),
                                                    synth::to_scenario_data(scenarios[i], "o"), opts);
    for (std::size_t k = 0; k < on_mirror.hypotheses.size(); ++k) {
      const auto& a = on_mirror.hypotheses[k].front();
      const auto& b = on_original.hypotheses[k].front();
      worst = std::max(worst, std::hypot(a.x - b.x, a.y + b.y));
    }
  }
  const bool columns = !mirrored.top1.columns.empty() && mirrored.top1.columns.size() == original.top1.columns.size();
  std::ostringstream detail;
  detail << "ADE right-hand / mirrored left-hand:";
  for (std::size_t c = 0; c < mirrored.top1.columns.size() && c < original.top1.columns.size(); ++c) {
    detail << " " << fmt("%.0fs ", original.top1.columns[c].horizon_s) << fmt("%.2f", original.top1.columns[c].ade_m)
           << "/" << fmt("%.2f m", mirrored.top1.columns[c].ade_m);
  }
  detail << "; reflected-model deviation " << fmt("%.3f m", worst) << " (limit " << fmt("%.1f m", cell) << ")";
  return {columns && worst <= cell + 1e-9, detail.str()};
}

// ---------------------------------------------------------------------------
// AC6: Top-K monotonicity.

Outcome ac6_topk() {
  std::mt19937_64 rng(66);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> steps(1, 40);
  std::size_t violations = 0;
  std::size_t k1_mismatch = 0;
  for (int set = 0; set < 100; ++set) {
    const std::size_t t = steps(rng);
    std::vector<eval::WorldPoint> gt(t);
    for (auto& p : gt) {
      p = {n(rng), n(rng)};
    }
    std::vector<std::vector<eval::WorldPoint>> hyps(10, std::vector<eval::WorldPoint>(t));
    for (auto& h : hyps) {
      for (auto& p : h) {
        p = {n(rng), n(rng)};
      }
    }
    for (const auto mode : {eval::BestOfK::kPerStep, eval::BestOfK::kTrajectoryMin}) {
      double prev = eval::best_of_k_ade(std::span(hyps).first(1), gt, mode);
      k1_mismatch += prev == eval::ade(hyps[0], gt) ? 0 : 1;
      for (std::size_t k = 2; k <= hyps.size(); ++k) {
        const double cur = eval::best_of_k_ade(std::span(hyps).first(k), gt, mode);
        violations += cur <= prev ? 0 : 1;
        prev = cur;
      }
    }
  }
  return {violations == 0 && k1_mismatch == 0, "100 sets, K = 1..10, both selection modes: " +
                                                   std::to_string(violations) + " monotonicity violations, " +
                                                   std::to_string(k1_mismatch) + " K=1 mismatches"};
}

// ---------------------------------------------------------------------------
// AC7: grid geometry.

Outcome ac7_geometry() {
  const grid::GridSpec spec{64, 0.5};
  const double half = spec.resolution() / 2.0;
  std::size_t bad_roundtrip = 0;
  std::size_t checked = 0;
  const std::vector<double> offsets{0.001, 0.25, 0.5, 0.75, 0.999};
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      const auto cell = grid::metric_to_cell(
          grid::cell_to_metric(*grid::metric_to_cell(grid::cell_coord_to_metric({r + 0.5, c + 0.5}, spec), spec), spec),
          spec);
      bad_roundtrip += cell && cell->row() == r && cell->col() == c ? 0 : 1;
      for (const double orow : offsets) {
        for (const double ocol : offsets) {
          const auto p = grid::cell_coord_to_metric({r + orow, c + ocol}, spec);
          const auto hit = grid::metric_to_cell(p, spec);
          ++checked;
          if (!hit) {
            ++bad_roundtrip;
            continue;
          }
          const auto center = grid::cell_to_metric(*hit, spec);
          bad_roundtrip += std::abs(center.x - p.x) <= half + 1e-12 && std::abs(center.z - p.z) <= half + 1e-12 ? 0 : 1;
        }
      }
    }
  }

  // Constructed rasterization cases: the extent is x in [-16, 16), z in [0, 32).
  const std::vector<grid::MetricPoint> inside{{0.0, 0.0}, {-16.0, 0.1}, {15.9, 31.9}, {0.3, 12.2}, {0.3, 12.3}};
  const std::vector<grid::MetricPoint> outside{{16.0, 5.0}, {0.0, 32.0}, {0.0, -0.01}, {-16.01, 3.0}, {40.0, -40.0}};
  std::vector<grid::MetricPoint> all;
  for (std::size_t i = 0; i < std::max(inside.size(), outside.size()); ++i) {
    if (i < inside.size()) {
      all.push_back(inside[i]);
    }
    if (i < outside.size()) {
      all.push_back(outside[i]);
    }
  }
  const auto raster = grid::rasterize_points(all, spec);
  std::set<std::size_t> expected;
  for (const auto& p : inside) {
    const auto row = static_cast<std::size_t>(32 - 1 - static_cast<long>(std::floor(p.x / 0.5)));
    const auto col = static_cast<std::size_t>(std::floor(p.z / 0.5));
    expected.insert(row * 64 + col);
  }
  std::set<std::size_t> marked;
  for (std::size_t i = 0; i < raster.grid.values().size(); ++i) {
    if (raster.grid.values()[i] > 0.0F) {
      marked.insert(i);
    }
  }
  const bool raster_ok = raster.dropped == outside.size() && marked == expected;
  return {bad_roundtrip == 0 && raster_ok,
          std::to_string(checked) + " sub-cell points over 64x64, " + std::to_string(bad_roundtrip) +
              " round-trip failures; rasterization dropped " + std::to_string(raster.dropped) + " of " +
              std::to_string(outside.size()) + " out-of-bounds points, cells " + (marked == expected ? "exact" : "wrong")};
}

// ---------------------------------------------------------------------------
// AC8: safety loss.

Outcome ac8_safety() {
  DTape tape(false);
  constexpr std::size_t side = 8;
  double worst = 0.0;
  bool disjoint_zero = true;
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const std::size_t n : {1U, 2U, 4U, 9U, 17U, 32U}) {
    std::vector<double> pred(side * side, 0.0);
    std::vector<double> mask(side * side, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = 1.0;
      mask[i] = 1.0;
    }
    const auto ones = ad::safety_loss(tape, DTensor::constant({1, 1, side, side}, pred),
                                      DTensor::constant({1, 1, side, side}, mask));
    worst = std::max(worst, std::abs(ones.item() - std::sqrt(static_cast<double>(n))));

    // Mass only where there is no obstacle.
    std::vector<double> away(side * side, 0.0);
    for (std::size_t i = n; i < side * side; ++i) {
      away[i] = u(rng);
    }
    disjoint_zero = disjoint_zero && ad::safety_loss(tape, DTensor::constant({1, 1, side, side}, away),
                                                     DTensor::constant({1, 1, side, side}, mask))
                                             .item() == 0.0;

    // Partial overlap with arbitrary values: the norm over the shared cells only.
    std::vector<double> mixed(side * side);
    double expected = 0.0;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      mixed[i] = u(rng);
      if (mask[i] > 0.0) {
        expected += mixed[i] * mixed[i];
      }
    }
    const auto partial = ad::safety_loss(tape, DTensor::constant({1, 1, side, side}, mixed),
                                         DTensor::constant({1, 1, side, side}, mask));
    worst = std::max(worst, std::abs(partial.item() - std::sqrt(expected)));
  }
  return {disjoint_zero && worst < 1e-6, std::string("disjoint masks give zero: ") + (disjoint_zero ? "yes" : "no") +
                                             ", max deviation from hand-computed norm " + fmt("%.1e", worst)};
}

// ---------------------------------------------------------------------------
// AC9: endpoint shapes of the default configuration.

Outcome ac9_shapes() {
  const forecast::Model<float> m(forecast::ModelConfig{}, 1);
  ad::Tape<float> tape(false);
  std::vector<forecast::ShapeRecord> trace;
  const auto out = m.step(tape, ad::Tensor<float>::zeros({1, 5, 256, 256}), m.zero_state(), &trace);
  const std::vector<std::pair<std::string, ad::Shape>> want{{"input", {1, 5, 256, 256}},
                                                            {"bottleneck", {1, 64, 32, 32}},
                                                            {"decoder0", {1, 8, 256, 256}},
                                                            {"head", {1, 1, 256, 256}}};
  bool ok = out.heatmap.shape() == ad::Shape{1, 1, 256, 256};
  std::ostringstream detail;
  for (const auto& [stage, shape] : want) {
    const auto it = std::find_if(trace.begin(), trace.end(), [&](const auto& r) { return r.stage == stage; });
    ok = ok && it != trace.end() && it->shape == shape;
    detail << stage << " ";
    if (it == trace.end()) {
      detail << "missing";
    } else {
      for (std::size_t d = 1; d < it->shape.size(); ++d) {
        detail << (d > 1 ? "x" : "") << it->shape[d];
      }
    }
    detail << "; ";
  }
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------
// AC10: end-to-end CLI reproducibility.

int shell(const std::string& cmd) {
  return std::system((cmd + " > /dev/null 2>&1").c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool cli_pipeline(const fs::path& root) {
  const std::string cli = INFER_CLI_PATH;
  const std::string ds = (root / "data").string();
  const std::string run = (root / "run").string();
  const std::string ckpt = (root / "run" / "model.ifck").string();
  return shell(cli + " generate --out " + ds + " --scenarios 4 --seed 7") == 0 &&
         shell(cli + " train --data " + ds + " --out " + run + " --preset micro --epochs 2 --seed 3") == 0 &&
         shell(cli + " eval --data " + ds + " --checkpoint " + ckpt + " --out " + (root / "eval").string() +
               " --top-k 5") == 0 &&
         shell(cli + " ablate --data " + ds + " --checkpoint " + ckpt + " --out " + (root / "ablate").string() +
               " --channels road,lane,obstacles --frame-rates 1.0,0.6") == 0;
}

Outcome ac10_reproducible() {
  const Stopwatch clock;
  const fs::path base = fs::temp_directory_path() / "infer_acceptance_e2e";
  fs::remove_all(base);
  const bool ran = cli_pipeline(base / "a") && cli_pipeline(base / "b");
  std::size_t compared = 0;
  std::vector<std::string> differing;
  if (ran) {
    for (const char* sub : {"run", "eval", "ablate"}) {
      for (const auto& entry : fs::directory_iterator(base / "a" / sub)) {
        const auto name = entry.path().filename().string();
        if (name == "resolved_config.txt") {
          continue;  // records the output paths
        }
        ++compared;
        if (slurp(entry.path()) != slurp(base / "b" / sub / name)) {
          differing.push_back(std::string(sub) + "/" + name);
        }
      }
    }
  }
  const double secs = clock.seconds();
  fs::remove_all(base);
  std::string detail = ran ? std::to_string(compared) + " artefacts compared, " +
                                 std::to_string(differing.size()) + " differ"
                           : std::string("pipeline failed");
  for (const auto& d : differing) {
    detail += " " + d;
  }
  detail += ", " + fmt("%.0f s", secs) + " for both runs";
  return {ran && compared > 0 && differing.empty() && secs < 300.0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> criteria{
      {"AC1", "gradient correctness", ac1_gradients},
      {"AC2", "Bayes filter oracle", ac2_bayes_oracle},
      {"AC3", "Markov baseline sanity", ac3_markov_sanity},
      {"AC4", "micro overfit", ac4_overfit},
      {"AC5", "mirrored generalization", ac5_mirrored},
      {"AC6", "Top-K monotonicity", ac6_topk},
      {"AC7", "grid geometry", ac7_geometry},
      {"AC8", "safety loss", ac8_safety},
      {"AC9", "architecture shapes", ac9_shapes},
      {"AC10", "end-to-end reproducibility", ac10_reproducible},
  };
  const std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [id, title, check] : criteria) {
    if (!selected.empty() && selected.count(id) == 0) {
      continue;
    }
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-4s %s  %s: %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
