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


#include "infer/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "infer/evalkit/evaluate.hpp"
#include "infer/evalkit/plots.hpp"
#include "infer/evalkit/report.hpp"
#include "infer/forecaster/train.hpp"
#include "infer/gridcore/raster_io.hpp"
#include "infer/synthgen/dataset.hpp"
#include "infer/synthgen/generator.hpp"

namespace infer::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSnapshotName = "resolved_config.txt";
constexpr const char* kModelFile = "model.ifck";
constexpr const char* kOptimizerFile = "adam.ifck";
constexpr const char* kLossFile = "loss.txt";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string grid_label(const grid::GridSpec& s) { return std::to_string(s.side()) + "x" + exact(s.resolution()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path out = cfg.required("out");
  fs::create_directories(out);
  return out;
}

std::string dataset_digest(const fs::path& dir) {
  return hex64(grid::fnv1a64(grid::read_file_bytes(dir / "manifest.txt")));
}

/// Scenario indices of the requested folds ("all" or a comma list), ascending.
std::vector<std::size_t> select_scenarios(const RunConfig& cfg, const std::string& key,
                                          const synth::DatasetManifest& manifest) {
  const auto items = cfg.list(key);
  std::set<std::size_t> chosen;
  if (items.size() == 1 && items[0] == "all") {
    for (std::size_t i = 0; i < manifest.scenarios.size(); ++i) {
      chosen.insert(i);
    }
  } else {
    for (const auto& item : items) {
      std::size_t fold = 0;
      try {
        fold = static_cast<std::size_t>(std::stoul(item));
      } catch (const std::exception&) {
        throw ConfigError(key + ": expected 'all' or fold numbers, got '" + cfg.get(key) + "'");
      }
      if (fold >= manifest.folds) {
        throw ConfigError(key + ": fold " + item + " does not exist (dataset has " + std::to_string(manifest.folds) +
                          ")");
      }
      const auto members = manifest.fold_members(fold);
      chosen.insert(members.begin(), members.end());
    }
  }
  if (chosen.empty()) {
    throw ConfigError(key + ": selects no scenarios");
  }
  return {chosen.begin(), chosen.end()};
}

std::optional<grid::Channel> optional_channel(const RunConfig& cfg, const std::string& key) {
  const auto& v = cfg.get(key);
  if (v.empty() || v == "none") {
    return std::nullopt;
  }
  try {
    return grid::channel_from_name(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

eval::BestOfK best_of_k_mode(const RunConfig& cfg) {
  const auto& v = cfg.get("best-of-k");
  if (v == "per-step") {
    return eval::BestOfK::kPerStep;
  }
  if (v == "trajectory") {
    return eval::BestOfK::kTrajectoryMin;
  }
  throw ConfigError("best-of-k: expected per-step or trajectory, got '" + v + "'");
}

/// The forecaster (kept alive by `holder`) or the baseline, checked against the dataset grid.
eval::Method load_method(const RunConfig& cfg, const synth::DatasetManifest& manifest,
                         std::unique_ptr<forecast::LoadedModel>& holder) {
  const auto& name = cfg.get("method");
  if (name == "markov") {
    markov::FilterConfig f;
    f.sigma_obs_cells = cfg.real("sigma-obs");
    f.sigma_process_cells = cfg.real("sigma-process");
    return eval::Method::baseline(f);
  }
  if (name != "model") {
    throw ConfigError("method: expected model or markov, got '" + name + "'");
  }
  holder = std::make_unique<forecast::LoadedModel>(forecast::load_model(cfg.required("checkpoint")));
  const auto it = holder->metadata.find("data_grid");
  if (it != holder->metadata.end() && it->second != grid_label(manifest.spec)) {
    throw std::runtime_error("grid spec mismatch: checkpoint was trained on " + it->second + " grids, dataset has " +
                             grid_label(manifest.spec));
  }
  const std::size_t side = holder->model.config().input_side;
  if (manifest.spec.side() % side != 0) {
    throw std::runtime_error("grid spec mismatch: model side " + std::to_string(side) +
                             " does not divide dataset side " + std::to_string(manifest.spec.side()));
  }
  return eval::Method::forecaster(holder->model, holder->hash);
}

eval::EvalOptions eval_options(const RunConfig& cfg, const fs::path& data, const std::string& folds_key) {
  eval::EvalOptions o;
  o.horizons_s = cfg.reals("horizons");
  if (o.horizons_s.empty()) {
    throw ConfigError("horizons: at least one horizon is required");
  }
  for (const double h : o.horizons_s) {
    if (!(h > 0.0)) {
      throw ConfigError("horizons: every horizon must be positive");
    }
  }
  o.top_k = cfg.count("top-k");
  if (o.top_k == 0) {
    throw ConfigError("top-k must be at least 1");
  }
  o.threads = std::max<std::size_t>(cfg.count("threads"), 1);
  o.precondition_frames = cfg.count("precondition-frames");
  o.fingerprint["dataset"] = dataset_digest(data);
  o.fingerprint["folds"] = cfg.get(folds_key);
  return o;
}

/// Columns must rebuild bit-exactly from the stored per-frame errors and every error must be a distance.
void check_report(const eval::EvalReport& r, std::span<const double> horizons) {
  for (const auto& f : r.frames) {
    if (!(f.error_top1 >= 0.0) || !(f.error_topk >= 0.0) || f.error_topk > f.error_top1) {
      throw SelfCheckError("report has an invalid error at " + f.trajectory + " step " + std::to_string(f.step));
    }
  }
  const auto again = eval::horizon_table(eval::trajectory_errors(r, false), horizons);
  if (again.columns.size() != r.top1.columns.size()) {
    throw SelfCheckError("horizon columns do not rebuild from the stored errors");
  }
  for (std::size_t i = 0; i < again.columns.size(); ++i) {
    if (again.columns[i].ade_m != r.top1.columns[i].ade_m) {
      throw SelfCheckError("horizon columns do not rebuild from the stored errors");
    }
  }
}

void write_report(const fs::path& dir, const std::string& stem, const eval::EvalReport& r) {
  write_text(dir / (stem + ".txt"), eval::format_report(r));
  write_text(dir / (stem + ".rec"), eval::encode_report(r));
}

ParamSpec opt(std::string key, std::string def, std::string help) { return {std::move(key), std::move(def), std::move(help), false}; }
ParamSpec flag(std::string key, std::string help) { return {std::move(key), "false", std::move(help), true}; }

std::vector<ParamSpec> evaluation_common() {
  return {opt("data", "", "dataset directory"),
          opt("checkpoint", "", "model checkpoint (not needed for --method markov)"),
          opt("method", "model", "model or markov"),
          opt("out", "", "output directory"),
          opt("folds", "all", "folds to evaluate: all or a comma list"),
          opt("horizons", "1,2,3,4", "evaluation horizons in seconds"),
          opt("top-k", "1", "hypotheses per step"),
          opt("best-of-k", "per-step", "per-step or trajectory"),
          opt("threads", "1", "evaluation worker threads"),
          opt("precondition-frames", "0", "observed frames; 0 uses the model's value (20 for markov)"),
          opt("sigma-obs", "1.0", "baseline observation sigma in cells"),
          opt("sigma-process", "0.5", "baseline process-noise sigma in cells")};
}

}  // namespace

std::vector<ParamSpec> generate_params() {
  return {opt("out", "", "dataset directory to create"),
          opt("scenarios", "10", "number of scenarios"),
          opt("seed", "1", "master seed"),
          opt("grid-side", "128", "rendered grid side in cells"),
          opt("resolution", "0.5", "rendered cell size in meters"),
          opt("frame-rate", "10", "frames per second"),
          opt("duration", "7", "scenario length in seconds"),
          opt("families", "straight,curve,left-turn,right-turn,lane-change", "road families, assigned round-robin"),
          opt("lane-side", "right", "right or left hand traffic"),
          opt("max-others", "3", "maximum number of other vehicles"),
          opt("obstacles", "true", "place roadside obstacles"),
          opt("static-dropout", "0", "probability of erasing static-channel cells"),
          opt("folds", "5", "cross-validation folds"),
          flag("force", "replace an existing dataset in --out")};
}

std::vector<ParamSpec> train_params() {
  return {opt("data", "", "dataset directory"),
          opt("out", "", "run directory for checkpoint and loss table"),
          opt("variant", "infer-skip", "infer or infer-skip"),
          opt("preset", "micro", "micro (desk scale) or full (default channel ladder)"),
          opt("grid-side", "64", "model input side in cells"),
          opt("epochs", "60", "total epochs"),
          opt("lr", "1e-4", "ADAM learning rate"),
          opt("lambda-safe", "1e-3", "safety loss weight"),
          opt("clip-norm", "10", "gradient clipping norm"),
          opt("teacher-forcing-epochs", "10", "epochs fed with ground-truth frames"),
          opt("bptt-window", "20", "truncated backpropagation window in frames"),
          opt("precondition-frames", "20", "frames fed before the first prediction"),
          opt("max-predicted-frames", "0", "predicted frames per trajectory and epoch; 0 = all"),
          opt("target-sigma", "1.5", "training target blob sigma in cells"),
          opt("train-folds", "all", "training folds: all or a comma list"),
          opt("val-fold", "none", "validation fold, excluded from training"),
          opt("ablate-channel", "none", "channel zeroed in every training frame"),
          opt("ade-every", "1", "ADE evaluation cadence in epochs"),
          opt("ade-horizon", "10", "ADE horizon in frames"),
          opt("early-stop-cells", "0", "stop once train ADE is below this many cells; 0 disables"),
          opt("seed", "1", "weight initialization seed"),
          flag("resume", "continue from the checkpoint in --out")};
}

std::vector<ParamSpec> eval_params() {
  auto p = evaluation_common();
  p.push_back(opt("plots", "3", "scenarios rendered as overlays"));
  p.push_back(opt("hist-bin", "0.25", "histogram bin width in meters"));
  p.push_back(opt("threshold", "2.0", "error threshold reported by the histogram"));
  return p;
}

std::vector<ParamSpec> ablate_params() {
  auto p = evaluation_common();
  p.push_back(opt("channels", "", "channels to ablate, comma list"));
  p.push_back(opt("frame-rates", "", "kept frame ratios, comma list"));
  return p;
}

std::vector<ParamSpec> associate_params() { return evaluation_common(); }

void cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = cfg.required("out");
  const std::size_t count = cfg.count("scenarios");
  if (count == 0) {
    throw ConfigError("scenarios must be at least 1");
  }
  synth::GeneratorConfig base;
  base.render_spec = grid::GridSpec(cfg.count("grid-side"), cfg.real("resolution"));
  base.frame_rate_hz = cfg.real("frame-rate");
  base.duration_s = cfg.real("duration");
  base.lane_side = synth::lane_side_from_name(cfg.get("lane-side"));
  base.max_others = cfg.count("max-others");
  base.obstacles = cfg.boolean("obstacles");
  base.static_dropout = cfg.real("static-dropout");
  std::vector<synth::RoadFamily> families;
  for (const auto& name : cfg.list("families")) {
    families.push_back(synth::family_from_name(name));
  }
  if (families.empty()) {
    throw ConfigError("families: at least one road family is required");
  }
  base.validate();

  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!cfg.boolean("force")) {
      throw std::runtime_error("output directory '" + dir.string() + "' is not empty (pass --force to replace it)");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name == "manifest.txt" || name == kSnapshotName || name.rfind("scenario_", 0) == 0) {
        fs::remove_all(entry.path());
      }
    }
  }
  const std::uint64_t seed = cfg.seed("seed");
  synth::DatasetWriter writer(dir, base.render_spec, base.frame_rate_hz, cfg.count("folds"));
  for (std::size_t i = 0; i < count; ++i) {
    synth::GeneratorConfig c = base;
    c.family = families[i % families.size()];
    writer.add(synth::generate_scenario(c, splitmix64(seed ^ splitmix64(i))));
  }
  const auto& manifest = writer.finish();
  cfg.write_snapshot(dir / kSnapshotName);

  const auto reread = synth::read_manifest(dir);
  if (reread.scenarios.size() != count) {
    throw SelfCheckError("manifest lists " + std::to_string(reread.scenarios.size()) + " scenarios, expected " +
                         std::to_string(count));
  }
  out << "dataset " << dir.string() << '\n';
  out << "  scenarios:    " << manifest.scenarios.size() << '\n';
  out << "  grid:         " << manifest.spec.side() << " x " << manifest.spec.side() << " @ "
      << manifest.spec.resolution() << " m\n";
  out << "  frame rate:   " << manifest.frame_rate_hz << " Hz\n";
  out << "  total frames: " << manifest.total_frames() << '\n';
  out << "  fold sizes:  ";
  for (std::size_t f = 0; f < manifest.folds; ++f) {
    out << ' ' << manifest.fold_members(f).size();
  }
  out << "\n  manifest fnv: " << dataset_digest(dir) << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const fs::path data = cfg.required("data");
  const auto manifest = synth::read_manifest(data);
  const fs::path dir = output_dir(cfg);
  const bool resume = cfg.boolean("resume");

  std::unique_ptr<forecast::Model<float>> model;
  ad::AdamState optimizer;
  std::size_t first_epoch = 0;
  std::map<std::string, std::string> previous;
  if (resume) {
    auto loaded = forecast::load_model(dir / kModelFile);
    previous = loaded.metadata;
    model = std::make_unique<forecast::Model<float>>(std::move(loaded.model));
    optimizer = forecast::load_optimizer(dir / kOptimizerFile);
    first_epoch = static_cast<std::size_t>(std::stoul(previous.at("epochs_completed")));
  } else {
    forecast::ModelConfig mc;
    const auto& preset = cfg.get("preset");
    if (preset == "micro") {
      mc = forecast::ModelConfig::micro();
    } else if (preset != "full") {
      throw ConfigError("preset: expected micro or full, got '" + preset + "'");
    }
    try {
      mc.variant = forecast::variant_from_name(cfg.get("variant"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("variant: ") + e.what());
    }
    mc.input_side = cfg.count("grid-side");
    mc.lambda_safe = cfg.real("lambda-safe");
    mc.bptt_window = cfg.count("bptt-window");
    mc.precondition_frames = cfg.count("precondition-frames");
    mc.target_sigma_cells = cfg.real("target-sigma");
    try {
      mc.validate();
    } catch (const forecast::ModelConfigError& e) {
      throw ConfigError(e.what());
    }
    model = std::make_unique<forecast::Model<float>>(mc, cfg.seed("seed"));
    optimizer = ad::make_adam_state(model->parameters());
  }
  if (manifest.spec.side() % model->config().input_side != 0) {
    throw ConfigError("grid-side " + std::to_string(model->config().input_side) +
                      " does not divide the dataset grid side " + std::to_string(manifest.spec.side()));
  }
  if (resume && previous.count("data_grid") != 0 && previous.at("data_grid") != grid_label(manifest.spec)) {
    throw std::runtime_error("grid spec mismatch: checkpoint was trained on " + previous.at("data_grid") +
                             " grids, dataset has " + grid_label(manifest.spec));
  }

  forecast::TrainConfig tc;
  tc.epochs = cfg.count("epochs");
  tc.learning_rate = cfg.real("lr");
  tc.clip_norm = cfg.real("clip-norm");
  tc.teacher_forcing_epochs = cfg.count("teacher-forcing-epochs");
  tc.max_predicted_frames = cfg.count("max-predicted-frames");
  tc.ade_every = cfg.count("ade-every");
  tc.ade_horizon = cfg.count("ade-horizon");
  tc.early_stop_ade_cells = cfg.real("early-stop-cells");
  if (first_epoch > tc.epochs) {
    throw ConfigError("epochs (" + std::to_string(tc.epochs) + ") is below the " + std::to_string(first_epoch) +
                      " epochs already completed");
  }

  const auto ablate = optional_channel(cfg, "ablate-channel");
  std::set<std::size_t> val_members;
  if (cfg.get("val-fold") != "none") {
    const auto fold = cfg.count("val-fold");
    if (fold >= manifest.folds) {
      throw ConfigError("val-fold " + std::to_string(fold) + " does not exist");
    }
    const auto m = manifest.fold_members(fold);
    val_members.insert(m.begin(), m.end());
  }
  std::vector<forecast::TrainingTrajectory> train_set;
  std::vector<forecast::TrainingTrajectory> val_set;
  const auto chosen = select_scenarios(cfg, "train-folds", manifest);
  for (std::size_t i = 0; i < manifest.scenarios.size(); ++i) {
    const bool is_val = val_members.count(i) != 0;
    if (!is_val && !std::binary_search(chosen.begin(), chosen.end(), i)) {
      continue;
    }
    auto traj = forecast::prepare_trajectory(synth::load_scenario(data, manifest, i), model->config(), ablate);
    (is_val ? val_set : train_set).push_back(std::move(traj));
  }
  if (train_set.empty()) {
    throw ConfigError("no training scenarios left after removing the validation fold");
  }
  cfg.write_snapshot(dir / kSnapshotName);

  std::ofstream loss(dir / kLossFile, resume ? std::ios::app : std::ios::trunc);
  if (!resume) {
    loss << "# epoch train_loss train_ade_m val_ade_m teacher_forced\n";
  }
  out << "training " << forecast::variant_name(model->config().variant) << " on " << train_set.size()
      << " scenarios (" << val_set.size() << " validation), " << model->parameter_count() << " parameters, epochs "
      << first_epoch << ".." << tc.epochs << '\n';
  std::size_t last_epoch = first_epoch;
  bool monotone = true;
  const auto result =
      forecast::train(*model, optimizer, std::span<const forecast::TrainingTrajectory>(train_set),
                      std::span<const forecast::TrainingTrajectory>(val_set), tc, first_epoch,
                      [&](const forecast::EpochRecord& r) {
                        monotone = monotone && r.epoch + 1 > last_epoch && std::isfinite(r.train_loss);
                        last_epoch = r.epoch + 1;
                        loss << r.epoch << ' ' << exact(r.train_loss) << ' ' << exact(r.train_ade_m) << ' '
                             << exact(r.val_ade_m) << ' ' << (r.teacher_forced ? 1 : 0) << '\n';
                        loss.flush();
                        out << "epoch " << std::setw(3) << r.epoch << "  loss " << std::scientific
                            << std::setprecision(4) << r.train_loss << std::defaultfloat << "  train ADE "
                            << fixed(r.train_ade_m, 3) << " m  val ADE " << fixed(r.val_ade_m, 3) << " m"
                            << (r.teacher_forced ? "  (teacher forced)" : "") << '\n';
                      });
  const std::size_t completed = result.curve.empty() ? first_epoch : result.curve.back().epoch + 1;
  std::map<std::string, std::string> meta{{"epochs_completed", std::to_string(completed)},
                                          {"data_grid", grid_label(manifest.spec)},
                                          {"dataset", dataset_digest(data)},
                                          {"ablate_channel", ablate ? std::string(grid::channel_name(*ablate)) : "none"},
                                          {"seed", resume ? previous.at("seed") : cfg.get("seed")}};
  const auto hash = forecast::save_model(dir / kModelFile, *model, meta);
  forecast::save_optimizer(dir / kOptimizerFile, optimizer);
  out << "checkpoint " << (dir / kModelFile).string() << " hash " << hash
      << (result.stopped_early ? " (stopped early)" : "") << '\n';
  if (!monotone) {
    throw SelfCheckError("loss table is not a finite, increasing sequence of epochs");
  }
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const fs::path data = cfg.required("data");
  const auto manifest = synth::read_manifest(data);
  std::unique_ptr<forecast::LoadedModel> holder;
  const auto method = load_method(cfg, manifest, holder);
  auto options = eval_options(cfg, data, "folds");
  options.best_of_k = best_of_k_mode(cfg);
  const std::size_t plots = cfg.count("plots");
  options.keep_heatmaps = plots > 0 && !method.is_baseline();
  const double bin = cfg.real("hist-bin");
  const double threshold = cfg.real("threshold");
  if (!(bin > 0.0)) {
    throw ConfigError("hist-bin must be positive");
  }
  const auto indices = select_scenarios(cfg, "folds", manifest);
  const fs::path dir = output_dir(cfg);
  cfg.write_snapshot(dir / kSnapshotName);

  std::vector<eval::ScenarioPrediction> preds;
  const auto report = eval::evaluate(method, eval::ScenarioSource::on_disk(data, manifest, indices), options, &preds);
  write_report(dir, "report", report);
  const auto errors = report.top1_errors();
  const auto hist = eval::error_histogram(errors, bin, threshold);
  write_text(dir / "histogram.txt", eval::format_histogram(hist));
  write_text(dir / "histogram.svg", eval::histogram_svg(hist));
  if (report.k > 1) {
    const auto errors_k = report.topk_errors();
    const auto hist_k = eval::error_histogram(errors_k, bin, threshold);
    write_text(dir / ("histogram_top" + std::to_string(report.k) + ".txt"), eval::format_histogram(hist_k));
  }

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < manifest.scenarios.size(); ++i) {
    by_id[manifest.scenarios[i].id] = i;
  }
  for (std::size_t n = 0; n < std::min(plots, preds.size()); ++n) {
    const auto& p = preds[n];
    const auto scenario = synth::load_scenario(data, manifest, by_id.at(p.id));
    const auto& frame = scenario.frames[p.observed_frames.back()];
    eval::OverlayTracks tracks{p.observed_truth, p.truth, {}};
    for (const auto& h : p.hypotheses) {
      tracks.predicted.push_back(h.front());
    }
    const std::size_t scale = std::max<std::size_t>(1, 512 / frame.spec().side());
    eval::write_ppm(dir / ("overlay_" + p.id + ".ppm"), eval::render_overlay(frame, tracks, scale));
    write_text(dir / ("overlay_" + p.id + ".svg"), eval::overlay_svg(frame, tracks));
    if (!p.heatmaps.empty()) {
      eval::write_pgm(dir / ("heatmap_" + p.id + "_first.pgm"), p.heatmaps.front());
      eval::write_pgm(dir / ("heatmap_" + p.id + "_last.pgm"), p.heatmaps.back());
    }
  }

  out << eval::format_report(report);
  if (method.is_baseline() && options.top_k > 1) {
    out << "note: the baseline yields one hypothesis per step; Top-K equals Top-1\n";
  }
  out << "within " << threshold << " m: " << fixed(100.0 * hist.fraction_within, 2) << " % of "
      << hist.total << " predictions\n";
  check_report(report, options.horizons_s);
}

void cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const auto channels = cfg.list("channels");
  const auto ratios = cfg.reals("frame-rates");
  if (channels.empty() && ratios.empty()) {
    throw ConfigError("nothing to ablate: pass --channels and/or --frame-rates");
  }
  for (const auto& c : channels) {
    try {
      (void)grid::channel_from_name(c);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("channels: ") + e.what());
    }
  }
  const fs::path data = cfg.required("data");
  const auto manifest = synth::read_manifest(data);
  std::unique_ptr<forecast::LoadedModel> holder;
  const auto method = load_method(cfg, manifest, holder);
  if (method.is_baseline() && !channels.empty()) {
    throw ConfigError("channel ablation needs --method model; the baseline reads no semantic channels");
  }
  auto options = eval_options(cfg, data, "folds");
  options.best_of_k = best_of_k_mode(cfg);
  const auto source = eval::ScenarioSource::on_disk(data, manifest, select_scenarios(cfg, "folds", manifest));
  const fs::path dir = output_dir(cfg);
  cfg.write_snapshot(dir / kSnapshotName);

  const auto baseline = eval::evaluate(method, source, options);
  write_report(dir, "baseline", baseline);
  check_report(baseline, options.horizons_s);
  auto row = [&](const std::string& label, const eval::EvalReport& r) {
    out << std::left << std::setw(22) << label << std::right;
    for (const auto& c : r.top1.columns) {
      out << std::setw(10) << fixed(c.ade_m, 3);
    }
    out << '\n';
  };
  out << std::left << std::setw(22) << "ADE (m), Top-1" << std::right;
  for (const auto& c : baseline.top1.columns) {
    out << std::setw(10) << (exact(c.horizon_s) + " s");
  }
  out << '\n';
  row("baseline", baseline);
  for (const auto& c : channels) {
    const auto r = eval::channel_ablation_run(method, source, c, options);
    check_report(r, options.horizons_s);
    write_report(dir, "ablate_" + c, r);
    row("w/o " + c, r);
  }
  if (!ratios.empty()) {
    const auto rows = eval::frame_rate_ablation_run(method, source, ratios, options);
    for (const auto& r : rows) {
      check_report(r.report, options.horizons_s);
      write_text(dir / ("frame_rate_" + fixed(r.keep_ratio, 2) + ".rec"), eval::encode_report(r.report));
      row("frame ratio " + fixed(r.keep_ratio, 2), r.report);
    }
    write_text(dir / "frame_rates.txt", eval::format_rate_table(rows));
  }
}

void cmd_associate(const RunConfig& cfg, std::ostream& out) {
  const fs::path data = cfg.required("data");
  const auto manifest = synth::read_manifest(data);
  std::unique_ptr<forecast::LoadedModel> holder;
  const auto method = load_method(cfg, manifest, holder);
  const auto options = eval_options(cfg, data, "folds");
  const auto source = eval::ScenarioSource::on_disk(data, manifest, select_scenarios(cfg, "folds", manifest));
  const fs::path dir = output_dir(cfg);
  cfg.write_snapshot(dir / kSnapshotName);
  const auto table = eval::association_run(method, source, options);
  const auto text = eval::format_association(table);
  write_text(dir / "association.txt", text);
  out << text;
  if (table.multi_vehicle_scenarios == 0) {
    out << "note: no scenario contains other vehicles, so every association is trivially correct\n";
  }
  if (!(table.accuracy() >= 0.0 && table.accuracy() <= 1.0)) {
    throw SelfCheckError("association accuracy outside [0, 1]");
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  struct Command {
    const char* name = nullptr;
    const char* description = nullptr;
    std::vector<ParamSpec> params;
    void (*body)(const RunConfig&, std::ostream&) = nullptr;
    CLI::App* app = nullptr;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
  };
  std::vector<Command> commands(5);
  auto define = [&](std::size_t i, const char* name, const char* description, std::vector<ParamSpec> params,
                    void (*body)(const RunConfig&, std::ostream&)) {
    commands[i].name = name;
    commands[i].description = description;
    commands[i].params = std::move(params);
    commands[i].body = body;
  };
  define(0, "generate", "render a synthetic scenario dataset", generate_params(), cmd_generate);
  define(1, "train", "train a forecaster on a dataset", train_params(), cmd_train);
  define(2, "eval", "evaluate a checkpoint or the Markov baseline", eval_params(), cmd_eval);
  define(3, "ablate", "channel and frame-rate ablations of a checkpoint", ablate_params(), cmd_ablate);
  define(4, "associate", "nearest-neighbour association accuracy", associate_params(), cmd_associate);

  CLI::App app{"infer: occupancy-grid trajectory forecasting on synthetic scenes", "infer"};
  app.require_subcommand(1, 1);
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.description);
    c.app->add_option("--config", c.config_path, "config file with key = value lines");
    for (const auto& p : c.params) {
      const std::string help = p.help + " [" + env_name(p.key) + "]";
      if (p.flag) {
        c.options[p.key] = c.app->add_flag("--" + p.key, help);
      } else {
        c.options[p.key] = c.app->add_option("--" + p.key, c.raw[p.key], help)->default_str(p.default_value);
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  for (auto& c : commands) {
    if (!c.app->parsed()) {
      continue;
    }
    try {
      RunConfig cfg(c.name, c.params);
      if (!c.config_path.empty()) {
        cfg.apply_file(c.config_path);
      }
      cfg.apply_env(env);
      for (const auto& p : c.params) {
        if (c.options[p.key]->count() > 0) {
          cfg.set(p.key, p.flag ? "true" : c.raw[p.key], "flag");
        }
      }
      c.body(cfg, out);
      return kExitOk;
    } catch (const ConfigError& e) {
      err << "infer " << c.name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const SelfCheckError& e) {
      err << "infer " << c.name << ": self-check failed: " << e.what() << '\n';
      return kExitSelfCheck;
    } catch (const std::exception& e) {
      err << "infer " << c.name << ": " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitUsage;
}

}  // namespace infer::cli
