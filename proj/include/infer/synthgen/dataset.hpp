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

#ifndef INFER_SYNTHGEN_DATASET_HPP
#define INFER_SYNTHGEN_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infer/gridcore/grid.hpp"
#include "infer/synthgen/generator.hpp"

/**
 * \file
 * \brief On-disk dataset: `manifest.txt`, plus per scenario one BEVG raster
 * holding 5 x frames channels (frame-major) and one track table.
 *
 * Manifest (text, one record per line):
 *
 *     infer-dataset 1
 *     grid <side> <resolution>
 *     frame_rate <hz>
 *     folds <k>
 *     scenarios <n>
 *     scenario id=<id> frames=<F> raster=<file> raster_bytes=<B> raster_fnv=<hex> tracks=<file>
 *              tracks_bytes=<B> tracks_fnv=<hex> fold=<f> seed=<s> family=<name> lane_side=<right|left>
 *
 * Track table: `t agent x y heading` rows; agents are `ego`, `target`, `other<i>`.
 */

namespace infer::synth {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDefaultFolds = 5;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class VersionMismatch : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class TruncatedFile : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class ChecksumMismatch : public DatasetError {
 public:
  ChecksumMismatch(const std::string& scenario, const std::string& what)
      : DatasetError("checksum mismatch in scenario '" + scenario + "': " + what), scenario_(scenario) {}
  [[nodiscard]] const std::string& scenario() const { return scenario_; }

 private:
  std::string scenario_;
};

struct ScenarioEntry {
  std::string id;
  std::size_t frames = 0;
  std::string raster_file;
  std::uint64_t raster_bytes = 0;
  std::uint64_t raster_fnv = 0;
  std::string tracks_file;
  std::uint64_t tracks_bytes = 0;
  std::uint64_t tracks_fnv = 0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::string family;
  std::string lane_side;
};

struct DatasetManifest {
  std::uint32_t version = kDatasetVersion;
  grid::GridSpec spec;
  double frame_rate_hz = 10.0;
  std::size_t folds = kDefaultFolds;
  std::vector<ScenarioEntry> scenarios;

  [[nodiscard]] std::vector<std::size_t> fold_members(std::size_t fold) const;
  [[nodiscard]] std::size_t total_frames() const;
};

/// Everything a forecaster or evaluator needs from one scenario.
struct ScenarioData {
  std::string id;
  std::vector<grid::FrameStack> frames;
  std::vector<double> timestamps;
  std::vector<grid::Pose2> ego_track;
  std::vector<grid::Pose2> target_track;
  std::vector<std::vector<grid::Pose2>> other_tracks;

  [[nodiscard]] std::size_t frame_count() const { return frames.size(); }
};

/// Renders every frame of a generated scenario.
[[nodiscard]] ScenarioData to_scenario_data(const Scenario& s, const std::string& id);

/// Fold of the i-th scenario under round-robin assignment.
[[nodiscard]] constexpr std::size_t fold_of(std::size_t index, std::size_t folds) { return index % folds; }

/// Streams scenarios to disk one at a time; finish() writes the manifest.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path dir, const grid::GridSpec& spec, double frame_rate_hz,
                std::size_t folds = kDefaultFolds);

  void add(const Scenario& s);
  const DatasetManifest& finish();

 private:
  std::filesystem::path dir_;
  DatasetManifest manifest_;
};

void write_dataset(const std::filesystem::path& dir, std::span<const Scenario> scenarios,
                   std::size_t folds = kDefaultFolds);

[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Loads and verifies one scenario. Throws TruncatedFile or ChecksumMismatch naming the scenario.
[[nodiscard]] ScenarioData load_scenario(const std::filesystem::path& dir, const DatasetManifest& manifest,
                                         std::size_t index);

[[nodiscard]] std::string encode_tracks(const ScenarioData& d);

}  // namespace infer::synth

#endif
