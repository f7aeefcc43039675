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

#include "infer/synthgen/dataset.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "infer/gridcore/raster_io.hpp"
#include "infer/synthgen/render.hpp"

namespace infer::synth {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kMagic = "infer-dataset";

std::string scenario_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scenario_%04zu", index);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

void append_row(std::ostringstream& os, double t, const std::string& agent, const grid::Pose2& p) {
  os << t << ' ' << agent << ' ' << p.x << ' ' << p.y << ' ' << p.heading << '\n';
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::map<std::string, std::string> parse_fields(std::istringstream& in) {
  std::map<std::string, std::string> kv;
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw DatasetError("malformed manifest field '" + tok + "'");
    }
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw DatasetError("manifest scenario record lacks '" + key + "'");
  }
  return it->second;
}

void parse_tracks(const std::string& text, const ScenarioEntry& entry, ScenarioData& d) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream row(line);
    double t = 0.0;
    std::string agent;
    grid::Pose2 p;
    if (!(row >> t >> agent >> p.x >> p.y >> p.heading)) {
      throw DatasetError("scenario '" + entry.id + "': malformed track row '" + line + "'");
    }
    if (agent == "ego") {
      d.timestamps.push_back(t);
      d.ego_track.push_back(p);
    } else if (agent == "target") {
      d.target_track.push_back(p);
    } else if (agent.rfind("other", 0) == 0) {
      const auto i = static_cast<std::size_t>(std::stoul(agent.substr(5)));
      if (d.other_tracks.size() <= i) {
        d.other_tracks.resize(i + 1);
      }
      d.other_tracks[i].push_back(p);
    } else {
      throw DatasetError("scenario '" + entry.id + "': unknown agent '" + agent + "'");
    }
  }
  const std::size_t n = d.timestamps.size();
  bool ok = n == entry.frames && d.target_track.size() == n;
  for (const auto& o : d.other_tracks) {
    ok = ok && o.size() == n;
  }
  if (!ok) {
    throw TruncatedFile("scenario '" + entry.id + "': track table does not cover " + std::to_string(entry.frames) +
                        " frames");
  }
}

}  // namespace

std::vector<std::size_t> DatasetManifest::fold_members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (scenarios[i].fold == fold) {
      out.push_back(i);
    }
  }
  return out;
}

std::size_t DatasetManifest::total_frames() const {
  std::size_t n = 0;
  for (const auto& s : scenarios) {
    n += s.frames;
  }
  return n;
}

ScenarioData to_scenario_data(const Scenario& s, const std::string& id) {
  ScenarioData d;
  d.id = id;
  d.frames = render_all_frames(s);
  d.timestamps = s.timestamps;
  d.ego_track = s.ego_track;
  d.target_track = s.target_track;
  d.other_tracks = s.other_tracks;
  return d;
}

std::string encode_tracks(const ScenarioData& d) {
  std::ostringstream os;
  os.precision(17);
  os << "# t agent x y heading\n";
  for (std::size_t k = 0; k < d.timestamps.size(); ++k) {
    const double t = d.timestamps[k];
    append_row(os, t, "ego", d.ego_track[k]);
    append_row(os, t, "target", d.target_track[k]);
    for (std::size_t i = 0; i < d.other_tracks.size(); ++i) {
      append_row(os, t, "other" + std::to_string(i), d.other_tracks[i][k]);
    }
  }
  return os.str();
}

DatasetWriter::DatasetWriter(fs::path dir, const grid::GridSpec& spec, double frame_rate_hz, std::size_t folds)
    : dir_(std::move(dir)) {
  if (folds == 0) {
    throw std::invalid_argument("DatasetWriter: fold count must be positive");
  }
  manifest_.spec = spec;
  manifest_.frame_rate_hz = frame_rate_hz;
  manifest_.folds = folds;
  fs::create_directories(dir_);
}

void DatasetWriter::add(const Scenario& s) {
  if (s.render_spec() != manifest_.spec || s.frame_rate_hz() != manifest_.frame_rate_hz) {
    throw std::invalid_argument("DatasetWriter: scenario grid or frame rate differs from the dataset's");
  }
  const std::size_t index = manifest_.scenarios.size();
  ScenarioEntry e;
  e.id = scenario_id(index);
  const ScenarioData d = to_scenario_data(s, e.id);

  std::vector<grid::SemanticGrid> channels;
  channels.reserve(d.frames.size() * grid::kChannelCount);
  for (const auto& f : d.frames) {
    channels.insert(channels.end(), f.channels.begin(), f.channels.end());
  }
  const auto raster = grid::encode_raster(channels);
  const std::string tracks = encode_tracks(d);

  e.frames = d.frames.size();
  e.raster_file = e.id + ".bevg";
  e.raster_bytes = raster.size();
  e.raster_fnv = grid::fnv1a64(raster);
  e.tracks_file = e.id + ".tracks.txt";
  e.tracks_bytes = tracks.size();
  e.tracks_fnv = grid::fnv1a64(as_bytes(tracks));
  e.fold = fold_of(index, manifest_.folds);
  e.seed = s.seed;
  e.family = std::string(family_name(s.config.family));
  e.lane_side = std::string(lane_side_name(s.config.lane_side));
  grid::write_file_bytes(dir_ / e.raster_file, raster);
  grid::write_file_bytes(dir_ / e.tracks_file, as_bytes(tracks));
  manifest_.scenarios.push_back(std::move(e));
}

const DatasetManifest& DatasetWriter::finish() {
  std::ostringstream os;
  os.precision(17);
  os << kMagic << ' ' << kDatasetVersion << '\n';
  os << "grid " << manifest_.spec.side() << ' ' << manifest_.spec.resolution() << '\n';
  os << "frame_rate " << manifest_.frame_rate_hz << '\n';
  os << "folds " << manifest_.folds << '\n';
  os << "scenarios " << manifest_.scenarios.size() << '\n';
  for (const auto& e : manifest_.scenarios) {
    os << "scenario id=" << e.id << " frames=" << e.frames << " raster=" << e.raster_file
       << " raster_bytes=" << e.raster_bytes << " raster_fnv=" << hex(e.raster_fnv) << " tracks=" << e.tracks_file
       << " tracks_bytes=" << e.tracks_bytes << " tracks_fnv=" << hex(e.tracks_fnv) << " fold=" << e.fold
       << " seed=" << e.seed << " family=" << e.family << " lane_side=" << e.lane_side << '\n';
  }
  const std::string text = os.str();
  grid::write_file_bytes(dir_ / kManifestName, as_bytes(text));
  return manifest_;
}

void write_dataset(const fs::path& dir, std::span<const Scenario> scenarios, std::size_t folds) {
  if (scenarios.empty()) {
    throw std::invalid_argument("write_dataset: no scenarios");
  }
  DatasetWriter w(dir, scenarios.front().render_spec(), scenarios.front().frame_rate_hz(), folds);
  for (const auto& s : scenarios) {
    w.add(s);
  }
  w.finish();
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  if (!fs::exists(path)) {
    throw DatasetError("dataset missing: no " + std::string(kManifestName) + " in '" + dir.string() + "'");
  }
  const auto bytes = grid::read_file_bytes(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  DatasetManifest m;
  std::string magic;
  std::uint32_t version = 0;
  if (!(in >> magic >> version) || magic != kMagic) {
    throw DatasetError("'" + path.string() + "' is not a dataset manifest");
  }
  if (version != kDatasetVersion) {
    throw VersionMismatch("dataset version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kDatasetVersion) + ")");
  }
  std::size_t declared = 0;
  bool have_count = false;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string key;
    if (!(row >> key)) {
      continue;
    }
    if (key == "grid") {
      std::size_t side = 0;
      double res = 0.0;
      row >> side >> res;
      m.spec = grid::GridSpec(side, res);
    } else if (key == "frame_rate") {
      row >> m.frame_rate_hz;
    } else if (key == "folds") {
      row >> m.folds;
    } else if (key == "scenarios") {
      row >> declared;
      have_count = true;
    } else if (key == "scenario") {
      const auto kv = parse_fields(row);
      ScenarioEntry e;
      e.id = field(kv, "id");
      e.frames = std::stoull(field(kv, "frames"));
      e.raster_file = field(kv, "raster");
      e.raster_bytes = std::stoull(field(kv, "raster_bytes"));
      e.raster_fnv = parse_hex(field(kv, "raster_fnv"));
      e.tracks_file = field(kv, "tracks");
      e.tracks_bytes = std::stoull(field(kv, "tracks_bytes"));
      e.tracks_fnv = parse_hex(field(kv, "tracks_fnv"));
      e.fold = std::stoull(field(kv, "fold"));
      e.seed = std::stoull(field(kv, "seed"));
      e.family = field(kv, "family");
      e.lane_side = field(kv, "lane_side");
      m.scenarios.push_back(std::move(e));
    } else {
      throw DatasetError("unknown manifest record '" + key + "'");
    }
  }
  if (!have_count || declared != m.scenarios.size()) {
    throw TruncatedFile("manifest declares " + std::to_string(declared) + " scenarios but lists " +
                        std::to_string(m.scenarios.size()));
  }
  return m;
}

ScenarioData load_scenario(const fs::path& dir, const DatasetManifest& manifest, std::size_t index) {
  const ScenarioEntry& e = manifest.scenarios.at(index);
  const auto raster = grid::read_file_bytes(dir / e.raster_file);
  if (raster.size() != e.raster_bytes) {
    throw TruncatedFile("scenario '" + e.id + "': raster has " + std::to_string(raster.size()) +
                        " bytes, manifest records " + std::to_string(e.raster_bytes));
  }
  if (grid::fnv1a64(raster) != e.raster_fnv) {
    throw ChecksumMismatch(e.id, "raster file " + e.raster_file);
  }
  const auto tracks_bytes = grid::read_file_bytes(dir / e.tracks_file);
  if (tracks_bytes.size() != e.tracks_bytes) {
    throw TruncatedFile("scenario '" + e.id + "': track table has " + std::to_string(tracks_bytes.size()) +
                        " bytes, manifest records " + std::to_string(e.tracks_bytes));
  }
  if (grid::fnv1a64(tracks_bytes) != e.tracks_fnv) {
    throw ChecksumMismatch(e.id, "track file " + e.tracks_file);
  }

  ScenarioData d;
  d.id = e.id;
  parse_tracks(std::string(tracks_bytes.begin(), tracks_bytes.end()), e, d);
  const auto channels = grid::decode_raster(raster);
  if (channels.size() != e.frames * grid::kChannelCount || channels.front().spec() != manifest.spec) {
    throw DatasetError("scenario '" + e.id + "': raster layout disagrees with the manifest");
  }
  d.frames.reserve(e.frames);
  for (std::size_t k = 0; k < e.frames; ++k) {
    grid::FrameStack f;
    f.timestamp_s = d.timestamps[k];
    f.ego_pose = d.ego_track[k];
    for (std::size_t c = 0; c < grid::kChannelCount; ++c) {
      f.channels[c] = channels[k * grid::kChannelCount + c];
    }
    d.frames.push_back(std::move(f));
  }
  return d;
}

}  // namespace infer::synth
