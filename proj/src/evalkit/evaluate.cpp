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


#include "infer/evalkit/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "infer/forecaster/rollout.hpp"
#include "infer/synthgen/render.hpp"

namespace infer::eval {

namespace {

constexpr double kTimeSlack = 1e-9;
constexpr std::size_t kBaselinePrecondition = 20;

std::string real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double distance(const WorldPoint& a, const WorldPoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

WorldPoint world(const grid::Pose2& p) { return {p.x, p.y}; }

/// Runs fn(i) for i in [0, count) on up to `threads` workers and rethrows the lowest-index failure.
template <typename R, typename Fn>
std::vector<R> parallel_map(std::size_t count, std::size_t threads, Fn fn) {
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) {
    pool.emplace_back(work);
  }
  work();
  for (auto& t : pool) {
    t.join();
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) {
    out.push_back(std::move(*s));
  }
  return out;
}

std::size_t precondition_length(const Method& method, const EvalOptions& options) {
  if (options.precondition_frames != 0) {
    return options.precondition_frames;
  }
  return method.is_baseline() ? kBaselinePrecondition : method.model->config().precondition_frames;
}

struct Split {
  std::vector<std::size_t> observed;
  std::vector<std::size_t> predicted;
  std::vector<double> times;
};

Split split_frames(const synth::ScenarioData& data, std::size_t p, const EvalOptions& options) {
  const std::size_t n = data.frame_count();
  if (p == 0 || p >= n || data.timestamps.size() != n) {
    throw std::invalid_argument("scenario '" + data.id + "' has " + std::to_string(n) +
                                " frames, too few for " + std::to_string(p) + " observed frames plus a prediction");
  }
  if (options.horizons_s.empty()) {
    throw std::invalid_argument("no evaluation horizons requested");
  }
  const double max_h = *std::max_element(options.horizons_s.begin(), options.horizons_s.end());
  std::vector<std::size_t> kept(n);
  std::iota(kept.begin(), kept.end(), std::size_t{0});
  if (options.keep_ratio != 1.0) {
    kept = synth::subsample_indices(n, options.keep_ratio);
  }
  const double t0 = data.timestamps[p - 1];
  Split s;
  for (const auto k : kept) {
    if (k < p) {
      s.observed.push_back(k);
    } else if (s.times.empty() || s.times.back() < max_h - kTimeSlack) {
      s.predicted.push_back(k);
      s.times.push_back(data.timestamps[k] - t0);
    }
  }
  if (s.predicted.empty()) {
    throw std::invalid_argument("scenario '" + data.id + "' keeps no frame to predict");
  }
  return s;
}

void predict_with_model(const forecast::Model<float>& model, const synth::ScenarioData& data, const Split& split,
                        const EvalOptions& options, ScenarioPrediction& out) {
  const std::size_t side = model.config().input_side;
  const std::size_t render_side = data.frames.front().spec().side();
  if (render_side % side != 0) {
    throw std::invalid_argument("model input side " + std::to_string(side) + " does not divide the dataset grid side " +
                                std::to_string(render_side));
  }
  auto prepare = [&](std::size_t k) {
    auto f = grid::downsample_frame(data.frames[k], side);
    return options.ablate ? grid::zero_channel(f, *options.ablate) : f;
  };
  std::vector<grid::FrameStack> observed;
  for (const auto k : split.observed) {
    observed.push_back(prepare(k));
  }
  std::vector<synth::StaticChannels> priors;
  for (const auto k : split.predicted) {
    priors.push_back(synth::static_channels_of(prepare(k)));
  }
  forecast::RolloutOptions ro;
  ro.output_side = render_side;
  ro.top_k = std::max<std::size_t>(options.top_k, 1);
  ro.nms_radius_cells = options.nms_radius_cells;
  auto r = forecast::rollout(model, std::span<const grid::FrameStack>(observed),
                             std::span<const synth::StaticChannels>(priors), priors.size(), ro);
  for (std::size_t i = 0; i < split.predicted.size(); ++i) {
    const auto& ego = data.ego_track.at(split.predicted[i]);
    std::vector<WorldPoint> hyps;
    for (const auto& h : r.positions[i].hypotheses) {
      hyps.push_back(grid::to_world_frame(ego, h.position));
    }
    if (hyps.empty()) {
      const auto& heat = r.heatmaps[i];
      hyps.push_back(grid::to_world_frame(ego, grid::cell_to_metric(heat.argmax(), heat.spec())));
    }
    out.hypotheses.push_back(std::move(hyps));
  }
  if (options.keep_heatmaps) {
    out.heatmaps = std::move(r.heatmaps);
  }
}

void predict_with_baseline(const markov::FilterConfig& cfg, const synth::ScenarioData& data, const Split& split,
                           ScenarioPrediction& out) {
  if (split.observed.size() < 2) {
    throw std::invalid_argument("scenario '" + data.id + "': the baseline needs two observed frames, got " +
                                std::to_string(split.observed.size()));
  }
  const std::size_t last = split.observed.back();
  const auto& ego = data.ego_track.at(last);
  std::vector<grid::MetricPoint> past;
  std::vector<double> times;
  for (const auto k : split.observed) {
    past.push_back(grid::to_sensor_frame(ego, world(data.target_track.at(k))));
    times.push_back(data.timestamps[k]);
  }
  const double step_s = data.timestamps[1] - data.timestamps[0];
  std::vector<std::size_t> steps;
  for (const auto k : split.predicted) {
    steps.push_back(static_cast<std::size_t>(std::llround((data.timestamps[k] - data.timestamps[last]) / step_s)));
  }
  const auto result =
      markov::run_baseline(past, times, step_s, data.frames.front().spec(), steps.back(), cfg);
  out.belief_lost = result.belief_lost;
  for (const auto s : steps) {
    out.hypotheses.push_back({grid::to_world_frame(ego, result.positions.at(s - 1))});
  }
}

}  // namespace

std::string Method::name() const { return is_baseline() ? "markov" : std::string(forecast::variant_name(model->config().variant)); }

ScenarioSource ScenarioSource::in_memory(std::span<const synth::ScenarioData> data) {
  return {data.size(), [data](std::size_t i) { return data[i]; }};
}

ScenarioSource ScenarioSource::on_disk(const std::filesystem::path& dir, const synth::DatasetManifest& manifest,
                                       std::vector<std::size_t> indices) {
  const std::size_t n = indices.size();
  return {n, [dir, manifest, idx = std::move(indices)](std::size_t i) {
            return synth::load_scenario(dir, manifest, idx.at(i));
          }};
}

ScenarioPrediction predict_scenario(const Method& method, const synth::ScenarioData& data,
                                    const EvalOptions& options) {
  if (data.frames.empty()) {
    throw std::invalid_argument("scenario '" + data.id + "' has no frames");
  }
  const auto split = split_frames(data, precondition_length(method, options), options);
  ScenarioPrediction out;
  out.id = data.id;
  out.observed_frames = split.observed;
  out.predicted_frames = split.predicted;
  out.times_s = split.times;
  for (const auto k : split.predicted) {
    out.truth.push_back(world(data.target_track.at(k)));
  }
  for (const auto k : split.observed) {
    out.observed_truth.push_back(world(data.target_track.at(k)));
  }
  if (method.is_baseline()) {
    predict_with_baseline(method.filter, data, split, out);
  } else {
    predict_with_model(*method.model, data, split, options, out);
  }
  return out;
}

EvalReport build_report(std::span<const ScenarioPrediction> predictions, const Method& method,
                        const EvalOptions& options) {
  EvalReport r;
  r.k = method.is_baseline() ? 1 : std::max<std::size_t>(options.top_k, 1);
  r.trajectory_count = predictions.size();
  std::vector<TrajectoryErrors> top1;
  std::vector<TrajectoryErrors> topk;
  for (const auto& p : predictions) {
    const std::size_t steps = p.truth.size();
    std::vector<double> e1(steps);
    std::vector<double> ek(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      e1[i] = distance(p.hypotheses[i].front(), p.truth[i]);
      ek[i] = e1[i];
      for (const auto& h : p.hypotheses[i]) {
        ek[i] = std::min(ek[i], distance(h, p.truth[i]));
      }
    }
    if (options.best_of_k == BestOfK::kTrajectoryMin) {
      std::vector<std::vector<WorldPoint>> sequences(r.k, std::vector<WorldPoint>(steps));
      for (std::size_t i = 0; i < steps; ++i) {
        for (std::size_t j = 0; j < r.k; ++j) {
          sequences[j][i] = p.hypotheses[i][std::min(j, p.hypotheses[i].size() - 1)];
        }
      }
      std::size_t best = 0;
      double best_ade = ade(sequences[0], p.truth);
      for (std::size_t j = 1; j < r.k; ++j) {
        const double a = ade(sequences[j], p.truth);
        if (a < best_ade) {
          best = j;
          best_ade = a;
        }
      }
      ek = step_errors(sequences[best], p.truth);
    }
    for (std::size_t i = 0; i < steps; ++i) {
      r.frames.push_back({p.id, i, p.times_s[i], e1[i], ek[i]});
    }
    top1.push_back({p.id, p.times_s, e1});
    topk.push_back({p.id, p.times_s, ek});
  }
  r.top1 = horizon_table(top1, options.horizons_s);
  if (r.k > 1) {
    r.topk = horizon_table(topk, options.horizons_s);
  }

  std::string horizons;
  for (const double h : options.horizons_s) {
    horizons += (horizons.empty() ? "" : ",") + real(h);
  }
  r.fingerprint = options.fingerprint;
  r.fingerprint["method"] = method.name();
  r.fingerprint["checkpoint"] = method.is_baseline() ? "none" : method.checkpoint_hash;
  r.fingerprint["k"] = std::to_string(r.k);
  r.fingerprint["best_of_k"] = options.best_of_k == BestOfK::kPerStep ? "per-step" : "trajectory";
  r.fingerprint["keep_ratio"] = real(options.keep_ratio);
  r.fingerprint["ablated_channel"] = options.ablate ? std::string(grid::channel_name(*options.ablate)) : "none";
  r.fingerprint["horizons_s"] = horizons;
  r.fingerprint["precondition_frames"] = std::to_string(precondition_length(method, options));
  return r;
}

EvalReport evaluate(const Method& method, const ScenarioSource& source, const EvalOptions& options,
                    std::vector<ScenarioPrediction>* predictions) {
  auto preds = parallel_map<ScenarioPrediction>(source.count, options.threads, [&](std::size_t i) {
    return predict_scenario(method, source.load(i), options);
  });
  std::stable_sort(preds.begin(), preds.end(),
                   [](const ScenarioPrediction& a, const ScenarioPrediction& b) { return a.id < b.id; });
  auto report = build_report(preds, method, options);
  if (predictions != nullptr) {
    *predictions = std::move(preds);
  }
  return report;
}

EvalReport channel_ablation_run(const Method& method, const ScenarioSource& source, std::string_view channel,
                                const EvalOptions& options) {
  EvalOptions o = options;
  o.ablate = grid::channel_from_name(channel);
  return evaluate(method, source, o);
}

std::vector<RateRow> frame_rate_ablation_run(const Method& method, const ScenarioSource& source,
                                             std::span<const double> keep_ratios, const EvalOptions& options) {
  std::vector<double> ratios(keep_ratios.begin(), keep_ratios.end());
  for (const double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw std::invalid_argument("keep ratio " + real(r) + " outside (0, 1]");
    }
  }
  std::sort(ratios.begin(), ratios.end(), std::greater<>());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
  std::vector<RateRow> rows;
  for (const double r : ratios) {
    EvalOptions o = options;
    o.keep_ratio = r;
    rows.push_back({r, evaluate(method, source, o)});
  }
  return rows;
}

AssociationTable association_run(const Method& method, const ScenarioSource& source, const EvalOptions& options) {
  auto rows = parallel_map<AssociationRow>(source.count, options.threads, [&](std::size_t i) {
    const auto data = source.load(i);
    const auto pred = predict_scenario(method, data, options);
    AssociationRow row{data.id, 1 + data.other_tracks.size(), 0, 0};
    for (std::size_t s = 0; s < pred.predicted_frames.size(); ++s) {
      const std::size_t k = pred.predicted_frames[s];
      std::vector<WorldPoint> detections;
      for (const auto& other : data.other_tracks) {
        detections.push_back(world(other.at(k)));
      }
      detections.push_back(world(data.target_track.at(k)));
      const auto match = associate(pred.hypotheses[s].front(), detections);
      ++row.frames;
      row.correct += match.index + 1 == detections.size() ? 1 : 0;
    }
    return row;
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const AssociationRow& a, const AssociationRow& b) { return a.id < b.id; });
  AssociationTable table;
  for (auto& row : rows) {
    table.frames += row.frames;
    table.correct += row.correct;
    table.multi_vehicle_scenarios += row.vehicles > 1 ? 1 : 0;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_association(const AssociationTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "scenario" << std::right << std::setw(10) << "vehicles" << std::setw(10)
     << "frames" << std::setw(10) << "correct" << std::setw(12) << "accuracy" << '\n';
  auto pct = [](double v) {
    std::ostringstream p;
    p << std::fixed << std::setprecision(2) << 100.0 * v << " %";
    return p.str();
  };
  for (const auto& r : table.rows) {
    os << std::left << std::setw(20) << r.id << std::right << std::setw(10) << r.vehicles << std::setw(10) << r.frames
       << std::setw(10) << r.correct << std::setw(12) << pct(r.accuracy()) << '\n';
  }
  os << std::left << std::setw(20) << "overall" << std::right << std::setw(10) << "" << std::setw(10) << table.frames
     << std::setw(10) << table.correct << std::setw(12) << pct(table.accuracy()) << '\n';
  return os.str();
}

}  // namespace infer::eval
