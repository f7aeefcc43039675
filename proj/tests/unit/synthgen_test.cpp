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
#include <fstream>
#include <numbers>
#include <set>

#include "infer/gridcore/raster_io.hpp"
#include "infer/synthgen/dataset.hpp"
#include "infer/synthgen/generator.hpp"
#include "infer/synthgen/render.hpp"

namespace {

namespace fs = std::filesystem;
namespace synth = infer::synth;
namespace grid = infer::grid;
using grid::Channel;

constexpr std::array<synth::RoadFamily, 5> kFamilies{synth::RoadFamily::kStraight, synth::RoadFamily::kCurve,
                                                     synth::RoadFamily::kLeftTurn, synth::RoadFamily::kRightTurn,
                                                     synth::RoadFamily::kLaneChange};

synth::GeneratorConfig small_config(synth::RoadFamily family) {
  synth::GeneratorConfig cfg;
  cfg.family = family;
  cfg.render_spec = grid::GridSpec{128, 0.5};
  return cfg;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("infer_synthgen_" + name);
  fs::remove_all(dir);
  return dir;
}

double heading_change(const std::vector<grid::Pose2>& track) {
  double total = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    total += synth::wrap_angle(track[i].heading - track[i - 1].heading);
  }
  return total;
}

TEST(Path, ArcGeometry) {
  const synth::Path p({0.0, 0.0, 0.0}, {{10.0, 0.0}, {0.5 * std::numbers::pi * 20.0, 1.0 / 20.0}, {5.0, 0.0}});
  const auto end_of_arc = p.pose_at(10.0 + 0.5 * std::numbers::pi * 20.0);
  EXPECT_NEAR(end_of_arc.x, 30.0, 1e-9);
  EXPECT_NEAR(end_of_arc.y, 20.0, 1e-9);
  EXPECT_NEAR(end_of_arc.heading, 0.5 * std::numbers::pi, 1e-12);
  // a lane 2 m to the right of a left arc has radius 22
  const auto lane = p.offset_pose(10.0, -2.0);
  EXPECT_NEAR(lane.y, -2.0, 1e-12);
  const auto beyond = p.pose_at(p.length() + 3.0);
  EXPECT_NEAR(beyond.y, p.pose_at(p.length()).y + 3.0, 1e-9);
}

TEST(Generator, DeterministicInConfigAndSeed) {
  for (const auto family : kFamilies) {
    const auto cfg = small_config(family);
    const auto a = synth::to_scenario_data(synth::generate_scenario(cfg, 42), "a");
    const auto b = synth::to_scenario_data(synth::generate_scenario(cfg, 42), "a");
    EXPECT_EQ(synth::encode_tracks(a), synth::encode_tracks(b));
    EXPECT_EQ(a.frames, b.frames);
    const auto c = synth::to_scenario_data(synth::generate_scenario(cfg, 43), "a");
    EXPECT_NE(synth::encode_tracks(a), synth::encode_tracks(c));
  }
}

TEST(Generator, StraightHasConstantHeadingAndSpeed) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = synth::generate_scenario(small_config(synth::RoadFamily::kStraight), seed);
    const auto& tr = s.target_track;
    const double v0 = std::hypot(tr[1].x - tr[0].x, tr[1].y - tr[0].y) * s.frame_rate_hz();
    for (std::size_t i = 1; i < tr.size(); ++i) {
      EXPECT_NEAR(synth::wrap_angle(tr[i].heading - tr[0].heading), 0.0, 1e-9);
      EXPECT_NEAR(std::hypot(tr[i].x - tr[i - 1].x, tr[i].y - tr[i - 1].y) * s.frame_rate_hz(), v0, 1e-6);
    }
  }
}

TEST(Generator, TurnsChangeHeadingByQuarterTurn) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto left = synth::generate_scenario(small_config(synth::RoadFamily::kLeftTurn), seed);
    EXPECT_NEAR(heading_change(left.target_track) * 180.0 / std::numbers::pi, 90.0, 10.0) << "seed " << seed;
    const auto right = synth::generate_scenario(small_config(synth::RoadFamily::kRightTurn), seed);
    EXPECT_NEAR(heading_change(right.target_track) * 180.0 / std::numbers::pi, -90.0, 10.0) << "seed " << seed;
  }
}

TEST(Generator, SpeedsStayInConfiguredRange) {
  for (const auto family : kFamilies) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto cfg = small_config(family);
      const auto s = synth::generate_scenario(cfg, seed);
      std::vector<const std::vector<grid::Pose2>*> tracks{&s.target_track};
      for (const auto& o : s.other_tracks) {
        tracks.push_back(&o);
      }
      for (const auto* tr : tracks) {
        for (std::size_t i = 1; i < tr->size(); ++i) {
          const double v = std::hypot((*tr)[i].x - (*tr)[i - 1].x, (*tr)[i].y - (*tr)[i - 1].y) * cfg.frame_rate_hz;
          EXPECT_GE(v, cfg.speed_min * 0.99);
          EXPECT_LE(v, cfg.speed_max * 1.01);
        }
      }
    }
  }
}

TEST(Generator, RejectsInfeasibleConfigs) {
  auto cfg = small_config(synth::RoadFamily::kStraight);
  cfg.speed_min = 20.0;
  cfg.speed_max = 30.0;
  try {
    (void)synth::generate_scenario(cfg, 1);
    FAIL() << "expected ConfigError";
  } catch (const synth::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("extent"), std::string::npos);
  }
  auto turn = small_config(synth::RoadFamily::kLeftTurn);
  turn.speed_min = 1.0;
  turn.speed_max = 2.0;
  EXPECT_THROW((void)synth::generate_scenario(turn, 1), synth::ConfigError);
  EXPECT_THROW((void)synth::family_from_name("roundabout"), synth::ConfigError);
}

TEST(Render, TargetCentroidTracksGroundTruth) {
  for (const auto family : kFamilies) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto s = synth::generate_scenario(small_config(family), seed);
      for (std::size_t k = 0; k < s.frame_count(); k += 7) {
        const auto f = synth::render_frame_at(s, k);
        const auto centroid = f.channel(Channel::kTarget).centroid();
        ASSERT_TRUE(centroid);
        const auto m = grid::cell_coord_to_metric(*centroid, s.render_spec());
        const auto truth = grid::to_sensor_frame(s.ego_track[k], {s.target_track[k].x, s.target_track[k].y});
        const double res = s.render_spec().resolution();
        EXPECT_LE(std::abs(m.x - truth.x), res);
        EXPECT_LE(std::abs(m.z - truth.z), res);
        EXPECT_GT(f.channel(Channel::kRoad).count_nonzero(), 0U);
      }
    }
  }
}

TEST(Render, KnownTargetPositionLandsOnExpectedCell) {
  synth::Scenario s;
  s.config.render_spec = grid::GridSpec{};
  s.config.obstacles = false;
  s.timestamps = {0.0};
  s.ego_track = {{0.0, 0.0, 0.0}};
  // ego looks along +x, so X = 10 m to the right is world y = -10
  s.target_track = {{20.0, -10.0, 0.0}};
  s.road.centerline = {{-10.0, 0.0}, {200.0, 0.0}};
  const auto f = synth::render_frame(s, 0.0);
  const auto c = f.channel(Channel::kTarget).centroid();
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->row, 215.5, 1.0);
  EXPECT_NEAR(c->col, 80.5, 1.0);
  EXPECT_EQ(f.channel(Channel::kOthers).count_nonzero(), 0U);
}

TEST(Render, NoOtherVehiclesMeansEmptyOthersChannel) {
  auto cfg = small_config(synth::RoadFamily::kCurve);
  cfg.max_others = 0;
  const auto s = synth::generate_scenario(cfg, 5);
  EXPECT_TRUE(s.other_tracks.empty());
  for (std::size_t k = 0; k < s.frame_count(); k += 10) {
    EXPECT_EQ(synth::render_frame_at(s, k).channel(Channel::kOthers).count_nonzero(), 0U);
  }
}

TEST(Render, OffGridTimestampRejected) {
  const auto s = synth::generate_scenario(small_config(synth::RoadFamily::kStraight), 3);
  EXPECT_THROW((void)synth::render_frame(s, 0.05), std::out_of_range);
  EXPECT_THROW((void)synth::render_frame(s, -0.1), std::out_of_range);
  EXPECT_NO_THROW((void)synth::render_frame(s, 0.3));
}

TEST(FutureStatic, MatchesRenderedFrameAndRejectsBeyondHorizon) {
  const auto s = synth::generate_scenario(small_config(synth::RoadFamily::kLeftTurn), 8);
  for (const double t : {0.0, 1.0, 2.5}) {
    const auto prior = synth::future_static_channels(s, t);
    const auto f = synth::render_frame(s, t);
    EXPECT_EQ(prior.road, f.channel(Channel::kRoad));
    EXPECT_EQ(prior.lane, f.channel(Channel::kLane));
    EXPECT_EQ(prior.obstacles, f.channel(Channel::kObstacles));
  }
  const double horizon = s.timestamps.back();
  EXPECT_NO_THROW((void)synth::future_static_channels(s, horizon));
  EXPECT_THROW((void)synth::future_static_channels(s, horizon + 1.0 / s.frame_rate_hz()), std::out_of_range);
}

TEST(FutureStatic, StraightRoadShiftsByEgoDisplacement) {
  const auto s = synth::generate_scenario(small_config(synth::RoadFamily::kStraight), 11);
  const auto& spec = s.render_spec();
  const std::size_t k0 = 0;
  const std::size_t k1 = 20;
  const auto a = synth::future_static_channels(s, s.timestamps[k0]);
  const auto b = synth::future_static_channels(s, s.timestamps[k1]);
  const double moved = std::hypot(s.ego_track[k1].x - s.ego_track[k0].x, s.ego_track[k1].y - s.ego_track[k0].y);
  const auto shift = static_cast<std::size_t>(std::lround(moved / spec.resolution()));
  for (const auto* pair : {&a.road, &a.obstacles}) {
    const auto& before = *pair;
    const auto& after = pair == &a.road ? b.road : b.obstacles;
    std::size_t mismatched = 0;
    std::size_t occupied = 0;
    for (std::size_t r = 0; r < spec.side(); ++r) {
      for (std::size_t c = 0; c + shift < spec.side(); ++c) {
        const bool x = before.at(r, c + shift) > 0;
        const bool y = after.at(r, c) > 0;
        occupied += (x || y) ? 1 : 0;
        mismatched += (x != y) ? 1 : 0;
      }
    }
    ASSERT_GT(occupied, 0U);
    EXPECT_LT(static_cast<double>(mismatched) / static_cast<double>(occupied), 0.05);
  }
}

TEST(Mirror, LeftHandFramesAreRowReflections) {
  for (const auto family : kFamilies) {
    auto cfg = small_config(family);
    const auto right = synth::generate_scenario(cfg, 21);
    cfg.lane_side = synth::LaneSide::kLeftHand;
    const auto left = synth::generate_scenario(cfg, 21);
    EXPECT_EQ(left.config.lane_side, synth::LaneSide::kLeftHand);
    for (std::size_t k = 0; k < right.frame_count(); k += 15) {
      const auto fr = grid::reflect_rows(synth::render_frame_at(right, k));
      const auto fl = synth::render_frame_at(left, k);
      for (std::size_t c = 0; c < grid::kChannelCount; ++c) {
        std::size_t diff = 0;
        for (std::size_t i = 0; i < fr.channels[c].values().size(); ++i) {
          diff += fr.channels[c].values()[i] != fl.channels[c].values()[i] ? 1 : 0;
        }
        EXPECT_LE(diff, fr.channels[c].values().size() / 1000) << synth::family_name(family) << " channel " << c;
      }
    }
  }
}

TEST(Dataset, RoundTripIsExact) {
  const auto dir = scratch_dir("roundtrip");
  std::vector<synth::Scenario> scenarios;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    scenarios.push_back(synth::generate_scenario(small_config(kFamilies[seed]), seed));
  }
  synth::write_dataset(dir, scenarios);
  const auto m = synth::read_manifest(dir);
  ASSERT_EQ(m.scenarios.size(), 3U);
  EXPECT_EQ(m.spec, scenarios[0].render_spec());
  for (std::size_t i = 0; i < 3; ++i) {
    const auto loaded = synth::load_scenario(dir, m, i);
    const auto expected = synth::to_scenario_data(scenarios[i], m.scenarios[i].id);
    EXPECT_EQ(loaded.frames, expected.frames);
    EXPECT_EQ(loaded.timestamps, expected.timestamps);
    EXPECT_EQ(loaded.target_track, expected.target_track);
    EXPECT_EQ(loaded.ego_track, expected.ego_track);
    EXPECT_EQ(loaded.other_tracks, expected.other_tracks);
    EXPECT_EQ(m.scenarios[i].seed, i);
  }
  fs::remove_all(dir);
}

TEST(Dataset, CorruptionAndVersionErrorsAreDistinct) {
  const auto dir = scratch_dir("corrupt");
  const std::vector<synth::Scenario> scenarios{synth::generate_scenario(small_config(synth::RoadFamily::kStraight), 1),
                                               synth::generate_scenario(small_config(synth::RoadFamily::kCurve), 2)};
  synth::write_dataset(dir, scenarios);
  const auto m = synth::read_manifest(dir);

  const auto raster_path = dir / m.scenarios[1].raster_file;
  auto bytes = grid::read_file_bytes(raster_path);
  const auto original = bytes;
  bytes[grid::kRasterHeaderBytes + 1234] ^= 0x40U;
  grid::write_file_bytes(raster_path, bytes);
  try {
    (void)synth::load_scenario(dir, m, 1);
    FAIL() << "expected ChecksumMismatch";
  } catch (const synth::ChecksumMismatch& e) {
    EXPECT_EQ(e.scenario(), m.scenarios[1].id);
    EXPECT_NE(std::string(e.what()).find(m.scenarios[1].id), std::string::npos);
  }
  EXPECT_NO_THROW((void)synth::load_scenario(dir, m, 0));

  bytes = original;
  bytes.resize(bytes.size() - 10);
  grid::write_file_bytes(raster_path, bytes);
  EXPECT_THROW((void)synth::load_scenario(dir, m, 1), synth::TruncatedFile);

  {
    std::ifstream in(dir / "manifest.txt");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    text.replace(text.find("infer-dataset 1"), 15, "infer-dataset 7");
    std::ofstream(dir / "manifest.txt") << text;
  }
  EXPECT_THROW((void)synth::read_manifest(dir), synth::VersionMismatch);
  EXPECT_THROW((void)synth::read_manifest(dir / "missing"), synth::DatasetError);
  fs::remove_all(dir);
}

TEST(Dataset, FiveFoldAssignment) {
  const auto dir = scratch_dir("folds");
  auto cfg = small_config(synth::RoadFamily::kStraight);
  cfg.render_spec = grid::GridSpec{64, 1.0};
  cfg.duration_s = 1.0;
  synth::DatasetWriter w(dir, cfg.render_spec, cfg.frame_rate_hz);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    w.add(synth::generate_scenario(cfg, seed));
  }
  const auto& m = w.finish();
  std::set<std::size_t> seen;
  for (std::size_t fold = 0; fold < 5; ++fold) {
    const auto members = m.fold_members(fold);
    EXPECT_EQ(members.size(), 2U);
    for (const auto i : members) {
      EXPECT_TRUE(seen.insert(i).second);
    }
  }
  EXPECT_EQ(seen.size(), 10U);
  EXPECT_EQ(synth::read_manifest(dir).total_frames(), 100U);
  fs::remove_all(dir);
}

TEST(Subsample, StrideRule) {
  std::vector<grid::FrameStack> frames;
  for (std::size_t k = 0; k < 40; ++k) {
    frames.push_back(grid::make_empty_frame(grid::GridSpec{4, 1.0}, 0.1 * static_cast<double>(k), {}));
  }
  EXPECT_EQ(synth::subsample_frames(frames, 1.0), frames);

  const auto half = synth::subsample_frames(frames, 0.5);
  ASSERT_EQ(half.size(), 20U);
  for (std::size_t k = 1; k < half.size(); ++k) {
    EXPECT_NEAR(half[k].timestamp_s - half[k - 1].timestamp_s, 0.2, 1e-12);
  }

  const auto idx = synth::subsample_indices(40, 0.6);
  ASSERT_EQ(idx.size(), 24U);
  const std::vector<std::size_t> head{0, 1, 3, 5, 6, 8, 10, 11, 13};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), idx.begin()));
  EXPECT_EQ(idx.back(), 38U);

  EXPECT_THROW((void)synth::subsample_indices(40, 0.0), std::invalid_argument);
  EXPECT_THROW((void)synth::subsample_indices(40, 1.5), std::invalid_argument);
  EXPECT_THROW((void)synth::subsample_indices(3, 0.2), std::invalid_argument);
}

}  // namespace
