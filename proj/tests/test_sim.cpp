// Copyright 2026 The PAPF Ballbot Authors
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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "papf/error.hpp"
#include "papf/io.hpp"
#include "papf/sim.hpp"

namespace papf::sim {
namespace {

EpisodeConfig wall_config(ControlMode mode) {
  EpisodeConfig cfg;
  cfg.name = "wall";
  cfg.wall = WallScenario{};
  cfg.mode = mode;
  cfg.rider.kind = RiderKind::kAggressive;
  cfg.rider.aggressiveness = 0.3;
  cfg.timeout = 15.0;
  cfg.seed = 1;
  return cfg;
}

EpisodeConfig course_config(const std::string& code, ControlMode mode, std::uint64_t seed = 1) {
  EpisodeConfig cfg;
  cfg.name = code;
  cfg.course = world::parse_course_code(code);
  cfg.mode = mode;
  cfg.rider.aggressiveness = 0.3;
  cfg.rider.noise_std = 0.1;
  cfg.timeout = 90.0;
  cfg.seed = seed;
  return cfg;
}

double min_lean_x(const EpisodeResult& r) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& f : r.trajectory) m = std::min(m, f.state.x_axis.theta);
  return m;
}

TEST(Episode, OpenHallWithoutObstaclesHasNoCollisions) {
  // A long wide hall driven straight down the middle.
  EpisodeConfig cfg;
  cfg.wall = WallScenario{40.0, 3.0};
  cfg.rider.kind = RiderKind::kWaypoint;
  cfg.rider.aggressiveness = 0.5;
  cfg.mode = ControlMode::kPapfWithTracking;
  cfg.timeout = 20.0;
  const auto r = run_episode(cfg);
  EXPECT_EQ(r.metrics.c_t + r.metrics.c_m, 0);
  EXPECT_GT(r.metrics.path_length, 5.0);
}

TEST(Episode, UnassistedRiderHitsTheWall) {
  const auto r = run_episode(wall_config(ControlMode::kNoSharedControl));
  EXPECT_GE(r.metrics.c_t + r.metrics.c_m, 1);
  EXPECT_LT(r.metrics.min_clearance, 0.0);
}

TEST(Episode, TrackingStopsShortOfTheWallAndLeansBack) {
  const auto r = run_episode(wall_config(ControlMode::kPapfWithTracking));
  EXPECT_EQ(r.metrics.c_t + r.metrics.c_m, 0);
  EXPECT_GT(r.metrics.min_clearance, 0.1);
  EXPECT_LT(min_lean_x(r), -0.05);  // counter-lean while braking
  EXPECT_FALSE(r.metrics.fallen);
  // It actually approached the wall rather than refusing to move.
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& f : r.trajectory) closest = std::min(closest, 5.0 - f.state.x_axis.p);
  EXPECT_LT(closest, 2.0);
}

TEST(Episode, NoSharedControlIsTransparent) {
  const auto r = run_episode(course_config("STW", ControlMode::kNoSharedControl));
  ASSERT_FALSE(r.trajectory.empty());
  for (const auto& f : r.trajectory) {
    ASSERT_EQ(f.v_cmd, f.v_usr);
    ASSERT_EQ(f.force.fx, 0.0);
    ASSERT_EQ(f.alarm_level, 0.0);
  }
}

// Remembers what it told the episode so the test can replay the tick.
class RecordingRider final : public rider::Rider {
 public:
  explicit RecordingRider(std::unique_ptr<rider::Rider> inner) : inner_(std::move(inner)) {}
  rider::RiderCommand command(const rider::RiderObservation& obs) override {
    last = inner_->command(obs);
    return last;
  }
  rider::RiderCommand last;

 private:
  std::unique_ptr<rider::Rider> inner_;
};

TEST(Episode, FilterStateIsThePreviousCommand) {
  const EpisodeConfig cfg = course_config("ZZN", ControlMode::kPapfWithTracking, 3);
  Episode ep(cfg);
  RecordingRider rider(make_rider(cfg, ep.world()));
  shared::NormalizedCommand previous;
  int checked = 0;
  while (!ep.done() && checked < 1500) {
    const shared::ObstacleScan scan = ep.scan();
    const auto fb = plant::feedback_velocity(ep.state(), cfg.plant);
    ep.advance(rider);
    const auto expect = shared::shared_control_step(rider.last.intent, scan, fb, previous, cfg.papf);
    ASSERT_EQ(ep.last_frame().v_cmd, expect.command) << "tick " << checked;
    previous = ep.last_frame().v_cmd;
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Episode, ModeChangeAppliesAtTheNextTick) {
  const EpisodeConfig cfg = wall_config(ControlMode::kNoSharedControl);
  Episode ep(cfg);
  auto rider = make_rider(cfg, ep.world());
  ep.advance(*rider);
  ep.set_mode(ControlMode::kPapfWithTrackingAndAlarm);
  EXPECT_EQ(ep.mode(), ControlMode::kNoSharedControl);
  ep.advance(*rider);
  EXPECT_EQ(ep.mode(), ControlMode::kPapfWithTrackingAndAlarm);
  EXPECT_EQ(ep.last_frame().mode, ControlMode::kPapfWithTrackingAndAlarm);
}

TEST(Episode, TicksAreOnTheSharedControlGrid) {
  const auto r = run_episode(wall_config(ControlMode::kPapfWithTracking));
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
    ASSERT_NEAR(r.trajectory[i].time, 0.02 * static_cast<double>(i), 1e-9);
  }
}

TEST(Episode, CollisionIndexIdentity) {
  for (auto mode : {ControlMode::kNoSharedControl, ControlMode::kPapfWithTracking}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto m = run_episode(course_config("ZZN", mode, seed)).metrics;
      EXPECT_DOUBLE_EQ(m.c_i, m.c_t + 3.0 * m.c_m);
    }
  }
}

TEST(Episode, DebounceMergesChatter) {
  // Pinned against the wall by an aggressive rider, contacts come and go but
  // each re-touch inside the debounce window is the same collision.
  EpisodeConfig cfg = wall_config(ControlMode::kNoSharedControl);
  cfg.debounce = 1e9;
  const auto m = run_episode(cfg).metrics;
  EXPECT_EQ(m.c_t + m.c_m, 1);
}

TEST(Episode, DeterministicAndByteIdentical) {
  const EpisodeConfig cfg = course_config("STN", ControlMode::kPapfWithTracking, 5);
  const auto a = run_episode(cfg), b = run_episode(cfg);
  EXPECT_EQ(a.metrics, b.metrics);
  std::ostringstream sa, sb;
  io::write_trajectory_csv(sa, a);
  io::write_trajectory_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(io::metrics_json(a), io::metrics_json(b));
}

TEST(Episode, SeedsChangeTheOutcome) {
  const auto a = run_episode(course_config("STW", ControlMode::kNoSharedControl, 1));
  const auto b = run_episode(course_config("STW", ControlMode::kNoSharedControl, 2));
  EXPECT_NE(a.trajectory.back().state, b.trajectory.back().state);
}

TEST(Episode, TimeoutCountsAsFailure) {
  EpisodeConfig cfg = wall_config(ControlMode::kPapfWithTracking);
  cfg.timeout = 2.0;
  const auto m = run_episode(cfg).metrics;
  EXPECT_TRUE(m.failed);
  EXPECT_NEAR(m.t_c, 2.0, 1e-9);
}

TEST(Episode, NonFiniteStateAborts) {
  EpisodeConfig cfg = wall_config(ControlMode::kNoSharedControl);
  plant::ControllerGains g;
  g.lqr_k.fill(std::numeric_limits<double>::quiet_NaN());
  cfg.gains = g;
  try {
    run_episode(cfg);
    FAIL() << "expected NumericAbort";
  } catch (const NumericAbort& e) {
    EXPECT_NE(std::string(e.dump()).find("pos="), std::string::npos);
  }
}

TEST(EpisodeConfig, ValidationNamesTheKey) {
  const auto key_of = [](const EpisodeConfig& cfg) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<valid>");
  };
  EpisodeConfig cfg = wall_config(ControlMode::kNoSharedControl);
  EXPECT_EQ(key_of(cfg), "<valid>");
  cfg.rates.shared_hz = 70;
  EXPECT_EQ(key_of(cfg), "rates.shared_hz");
  cfg = wall_config(ControlMode::kNoSharedControl);
  cfg.papf.epsilon = 1.0;
  EXPECT_EQ(key_of(cfg), "papf.epsilon");
  cfg = wall_config(ControlMode::kNoSharedControl);
  cfg.course = world::parse_course_code("STN");
  EXPECT_EQ(key_of(cfg), "course");
  cfg.wall.reset();
  cfg.course->corridor_width = 0.5;
  EXPECT_EQ(key_of(cfg), "course.corridor_width");
  cfg = wall_config(ControlMode::kNoSharedControl);
  cfg.timeout = 0;
  EXPECT_EQ(key_of(cfg), "timeout");
}

TEST(DeriveSeed, StreamsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(7, 1), derive_seed(7, 1));
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
  EXPECT_NE(derive_seed(7, 1), derive_seed(8, 1));
}

// ---- batch ----

TEST(Summary, MeanAndStandardError) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  // sample sd = sqrt(5/3), se = sd / 2
  EXPECT_NEAR(s.standard_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(summarize({4.2}).standard_error, 0.0);
  EXPECT_EQ(summarize({}).mean, 0.0);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Batch, SingleEpisodeHasZeroError) {
  const auto b = run_batch({course_config("STW", ControlMode::kPapfWithTracking)}, {4});
  ASSERT_EQ(b.cells.size(), 1u);
  EXPECT_EQ(b.cells[0].key, "STW/papf-tracking");
  EXPECT_EQ(b.cells[0].t_c.standard_error, 0.0);
  EXPECT_EQ(b.cells[0].runs.size(), 1u);
}

TEST(Batch, IndependentOfOrderAndThreads) {
  const std::vector<EpisodeConfig> forward = {course_config("ZZW", ControlMode::kNoSharedControl),
                                              course_config("ZZW", ControlMode::kPapfWithTracking)};
  const std::vector<EpisodeConfig> backward(forward.rbegin(), forward.rend());
  const auto a = run_batch(forward, {1, 2, 3}, 1, 1);
  const auto b = run_batch(backward, {3, 1, 2}, 1, 4);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].key, b.cells[i].key);
    EXPECT_EQ(a.cells[i].seeds, b.cells[i].seeds);
    EXPECT_EQ(a.cells[i].runs, b.cells[i].runs);
    EXPECT_EQ(a.cells[i].c_i.mean, b.cells[i].c_i.mean);
  }
  std::ostringstream sa, sb;
  io::write_summary_csv(sa, a);
  io::write_summary_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Batch, RepetitionsRepeatTheSeeds) {
  const auto b = run_batch({wall_config(ControlMode::kPapfWithTracking)}, {1, 2}, 2, 2);
  ASSERT_EQ(b.cells.size(), 1u);
  EXPECT_EQ(b.cells[0].seeds, (std::vector<std::uint64_t>{1, 1, 2, 2}));
  EXPECT_EQ(b.cells[0].runs[0], b.cells[0].runs[1]);
}

TEST(Batch, AbortsAreReportedNotFatal) {
  EpisodeConfig bad = wall_config(ControlMode::kNoSharedControl);
  bad.name = "bad";
  plant::ControllerGains g;
  g.lqr_k.fill(std::numeric_limits<double>::quiet_NaN());
  bad.gains = g;
  const auto b = run_batch({bad, course_config("STW", ControlMode::kPapfWithTracking)}, {1, 2}, 1, 2);
  ASSERT_EQ(b.failures.size(), 2u);
  EXPECT_EQ(b.failures[0].seed, 1u);
  EXPECT_NE(b.failures[0].message.find("non-finite"), std::string::npos);
  std::size_t aborted = 0, completed = 0;
  for (const auto& c : b.cells) {
    aborted += c.aborted;
    completed += c.runs.size();
  }
  EXPECT_EQ(aborted, 2u);
  EXPECT_EQ(completed, 2u);
}

TEST(Compare, IdenticalModesGiveUnitRatios) {
  const auto cmp = compare_modes(wall_config(ControlMode::kNoSharedControl), {1, 2},
                                 ControlMode::kNoSharedControl, ControlMode::kNoSharedControl);
  for (const auto& r : cmp.ratios) {
    if (r.baseline == 0.0) {
      EXPECT_FALSE(r.ratio) << r.metric;
    } else {
      ASSERT_TRUE(r.ratio) << r.metric;
      EXPECT_DOUBLE_EQ(*r.ratio, 1.0) << r.metric;
    }
  }
  EXPECT_DOUBLE_EQ(cmp.median_t_c_ratio, 1.0);
}

TEST(Compare, ZeroBaselineIsFlaggedNotDivided) {
  // Nobody collides in the open hall, so the collision ratios are undefined.
  EpisodeConfig cfg;
  cfg.wall = WallScenario{40.0, 3.0};
  cfg.rider.aggressiveness = 0.5;
  cfg.timeout = 10.0;
  const auto cmp = compare_modes(cfg, {1});
  for (const auto& r : cmp.ratios) {
    if (r.metric == "t_c") {
      EXPECT_TRUE(r.ratio);
    } else {
      EXPECT_EQ(r.baseline, 0.0);
      EXPECT_FALSE(r.ratio) << r.metric;
    }
  }
}

}  // namespace
}  // namespace papf::sim
