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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "papf/error.hpp"
#include "papf/rider.hpp"

namespace papf::rider {
namespace {

constexpr double kPi = std::numbers::pi;

RiderObservation at(double x, double y, double yaw = 0.0, double t = 0.0) {
  RiderObservation o;
  o.pose = Pose2{{x, y}, yaw};
  o.time = t;
  return o;
}

WaypointRiderParams full() {
  WaypointRiderParams p;
  p.aggressiveness = 1.0;
  return p;
}

TEST(WaypointRider, DeadAheadIsPureForward) {
  WaypointRider r({{{10, 0}}, 0.5}, full());
  const auto cmd = r.command(at(0, 0));
  EXPECT_NEAR(cmd.intent.x, 1.0, 1e-12);
  EXPECT_NEAR(cmd.intent.y, 0.0, 1e-12);
  EXPECT_NEAR(cmd.yaw_rate_cmd, 0.0, 1e-12);
  EXPECT_NEAR(cmd.disturbance_torque.x, kDefaultLeanTorque, 1e-12);
}

TEST(WaypointRider, LeftOfTheRobotIsPositiveY) {
  WaypointRider r({{{0, 10}}, 0.5}, full());
  const auto cmd = r.command(at(0, 0));
  EXPECT_NEAR(cmd.intent.x, 0.0, 1e-12);
  EXPECT_NEAR(cmd.intent.y, 1.0, 1e-12);
  EXPECT_GT(cmd.yaw_rate_cmd, 0.0);  // turns to face it
  EXPECT_LE(cmd.yaw_rate_cmd, kDefaultMaxYawRate);
}

TEST(WaypointRider, IntentIsExpressedInTheRobotFrame) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-5.0, 5.0), a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 goal{u(rng), u(rng)}, pos{u(rng), u(rng)};
    if (norm(goal - pos) < 2.0) continue;  // stay out of the arrival taper
    const double yaw = a(rng);
    WaypointRider r({{goal}, 0.5}, full());
    const auto cmd = r.command(at(pos.x, pos.y, yaw));
    // Rotate the intent back into the world and compare with the bearing.
    const double wx = std::cos(yaw) * cmd.intent.x - std::sin(yaw) * cmd.intent.y;
    const double wy = std::sin(yaw) * cmd.intent.x + std::cos(yaw) * cmd.intent.y;
    const Vec2 d = goal - pos;
    EXPECT_NEAR(wx, d.x / norm(d), 1e-9);
    EXPECT_NEAR(wy, d.y / norm(d), 1e-9);
  }
}

TEST(WaypointRider, AggressivenessScalesTheIntent) {
  WaypointRiderParams p;
  p.aggressiveness = 0.4;
  WaypointRider r({{{10, 0}}, 0.5}, p);
  EXPECT_NEAR(r.command(at(0, 0)).intent.x, 0.4, 1e-12);
}

TEST(WaypointRider, TapersIntoTheLastStop) {
  WaypointRider r({{{10, 0}}, 0.5}, full());
  EXPECT_NEAR(r.command(at(9.0, 0)).intent.x, 1.0, 1e-12);   // at 2r
  EXPECT_NEAR(r.command(at(9.25, 0)).intent.x, 0.6, 1e-12);  // halfway
  EXPECT_NEAR(r.command(at(9.49, 0)).intent.x, 0.2 + 0.8 * 0.01 / 0.5, 1e-9);
}

TEST(WaypointRider, StraightWaypointsDoNotSlowIt) {
  WaypointRider r({{{1, 0}, {2, 0}, {3, 0}, {10, 0}}, 0.5}, full());
  EXPECT_FALSE(r.is_stop(1));
  EXPECT_TRUE(r.is_stop(3));
  EXPECT_NEAR(r.command(at(0.2, 0)).intent.x, 1.0, 1e-12);
}

TEST(WaypointRider, CornersAreStops) {
  WaypointRider r({{{1, 0}, {5, 0}, {5, 5}}, 0.5}, full());
  EXPECT_FALSE(r.is_stop(0));  // no incoming leg, so not a corner
  EXPECT_TRUE(r.is_stop(1));
  r.command(at(1, 0));
  const auto cmd = r.command(at(4.2, 0));
  EXPECT_NEAR(cmd.intent.x, 0.2 + 0.8 * 0.3 / 0.5, 1e-12);
}

TEST(WaypointRider, AdvancesAndFinishes) {
  WaypointRider r({{{1, 0}, {2, 0}}, 0.5}, full());
  r.command(at(0.7, 0));
  EXPECT_EQ(r.current_index(), 1u);
  const auto cmd = r.command(at(1.9, 0));
  EXPECT_TRUE(r.complete());
  EXPECT_EQ(cmd.intent.x, 0.0);
  EXPECT_EQ(cmd.intent.y, 0.0);
  EXPECT_EQ(cmd.disturbance_torque.x, 0.0);
}

TEST(WaypointRider, IntentStaysInTheUnitBox) {
  WaypointRiderParams p = full();
  p.noise_std = 0.8;
  p.seed = 4;
  WaypointRider r({{{100, 3}}, 0.5}, p);
  for (int i = 0; i < 5000; ++i) {
    const auto cmd = r.command(at(0, 0, 0.1, 0.02 * i));
    ASSERT_LE(std::abs(cmd.intent.x), 1.0);
    ASSERT_LE(std::abs(cmd.intent.y), 1.0);
    ASSERT_LE(std::abs(cmd.yaw_rate_cmd), kDefaultMaxYawRate);
  }
}

TEST(WaypointRider, WanderIsSeededAndCentred) {
  WaypointRiderParams p;
  p.aggressiveness = 0.3;
  p.noise_std = 0.1;
  p.seed = 8;
  WaypointRider a({{{100, 0}}, 0.5}, p), b({{{100, 0}}, 0.5}, p);
  p.seed = 9;
  WaypointRider c({{{100, 0}}, 0.5}, p);
  double mean = 0.0, sq = 0.0;
  bool differs = false;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto ca = a.command(at(0, 0, 0, 0.02 * i));
    const auto cb = b.command(at(0, 0, 0, 0.02 * i));
    const auto cc = c.command(at(0, 0, 0, 0.02 * i));
    ASSERT_EQ(ca.intent.x, cb.intent.x);
    differs |= ca.intent.x != cc.intent.x;
    mean += ca.intent.y;
    sq += ca.intent.y * ca.intent.y;
  }
  EXPECT_TRUE(differs);
  mean /= n;
  // Correlated samples: 400 s at tau 1 s gives a loose but meaningful bound.
  EXPECT_NEAR(mean, 0.0, 0.03);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 0.1, 0.03);
}

TEST(WaypointRider, RejectsBadParameters) {
  WaypointRiderParams p;
  p.aggressiveness = 0.0;
  EXPECT_THROW(WaypointRider({{{1, 0}}, 0.5}, p), ConfigError);
  EXPECT_THROW(WaypointRider({{}, 0.5}, WaypointRiderParams{}), ConfigError);
  EXPECT_THROW(WaypointRider({{{1, 0}}, 0.0}, WaypointRiderParams{}), ConfigError);
}

TEST(AggressiveRider, PushesAtConstantMagnitude) {
  AggressiveRider r({5, 0}, 0.3);
  for (double x : {0.0, 2.0, 4.9}) {
    const auto cmd = r.command(at(x, 0));
    EXPECT_NEAR(cmd.intent.x, 0.3, 1e-12);
    EXPECT_NEAR(cmd.disturbance_torque.x, 0.3 * kDefaultLeanTorque, 1e-12);
  }
  // Past the target it keeps pushing along the last heading toward it.
  EXPECT_NEAR(r.command(at(5.0, 0)).intent.x, 0.3, 1e-12);
  EXPECT_NEAR(r.command(at(0, 0, kPi / 2)).intent.y, -0.3, 1e-12);
}

// ---- recordings ----

Recording parse(const std::string& text) {
  std::istringstream in(text);
  return parse_recording(in);
}

TEST(Recording, ParsesAllLineKinds) {
  const auto rec = parse(
      R"({"type":"header","version":1,"seed":12})"
      "\n"
      R"({"t":0.0,"ix":0.5,"iy":0,"yaw":0})"
      "\n\n"
      R"({"t":0.5,"mode":"papf-tracking"})"
      "\n"
      R"({"type":"steer","t":1.0,"ix":-0.2,"iy":0.1,"yaw":0.5})"
      "\n"
      R"({"type":"end","t":2.0})"
      "\n");
  ASSERT_EQ(rec.samples.size(), 2u);
  ASSERT_EQ(rec.modes.size(), 1u);
  EXPECT_EQ(rec.modes[0].mode, ControlMode::kPapfWithTracking);
  EXPECT_EQ(rec.end_time, 2.0);
  EXPECT_EQ(rec.seed, 12u);
  EXPECT_FALSE(rec.header_json.empty());
}

TEST(Recording, ResetEndsTheReplayablePart) {
  const auto rec = parse(
      R"({"t":0.0,"ix":0.5,"iy":0,"yaw":0})"
      "\n"
      R"({"type":"reset","t":3.0})"
      "\n"
      R"({"t":0.0,"ix":0.9,"iy":0,"yaw":0})"
      "\n");
  EXPECT_EQ(rec.samples.size(), 1u);
  EXPECT_EQ(rec.end_time, 3.0);
}

TEST(Recording, RejectsMalformedInput) {
  EXPECT_THROW(parse("{not json\n"), ParseError);
  EXPECT_THROW(parse("[1,2]\n"), ParseError);
  EXPECT_THROW(parse(R"({"t":0,"ix":0.5})"), ParseError);
  EXPECT_THROW(parse(R"({"t":0,"mode":"warp"})"), ParseError);
  EXPECT_THROW(parse(R"({"type":"bogus","t":0})"), ParseError);
  EXPECT_THROW(parse(R"({"t":1,"ix":0,"iy":0,"yaw":0})"
                     "\n"
                     R"({"t":0.5,"ix":0,"iy":0,"yaw":0})"),
               ParseError);
}

TEST(Recording, RejectsUnknownVersion) {
  try {
    parse(R"({"type":"header","version":2})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Recording, MissingFileIsAParseError) {
  EXPECT_THROW(load_recording("/nonexistent/path.jsonl"), ParseError);
}

TEST(ReplayRider, ZeroOrderHold) {
  auto rec = parse(
      R"({"t":0.5,"ix":0.4,"iy":0,"yaw":1})"
      "\n"
      R"({"t":1.5,"ix":-0.2,"iy":0.3,"yaw":0})"
      "\n"
      R"({"type":"end","t":3.0})");
  ReplayRider r(rec);
  EXPECT_EQ(r.command(at(0, 0, 0, 0.0)).intent.x, 0.0);  // before the first sample
  auto c = r.command(at(0, 0, 0, 0.5));
  EXPECT_EQ(c.intent.x, 0.4);
  EXPECT_EQ(c.yaw_rate_cmd, kDefaultMaxYawRate);
  EXPECT_EQ(r.command(at(0, 0, 0, 1.49)).intent.x, 0.4);
  c = r.command(at(0, 0, 0, 2.9));
  EXPECT_EQ(c.intent.x, -0.2);
  EXPECT_EQ(c.intent.y, 0.3);
  EXPECT_EQ(r.command(at(0, 0, 0, 3.0)).intent.x, -0.2);  // end is inclusive
  EXPECT_EQ(r.command(at(0, 0, 0, 3.02)).intent.x, 0.0);
}

TEST(ReplayRider, ModeSwitchesFireOnce) {
  ReplayRider r(parse(R"({"t":1.0,"mode":"papf"})"));
  EXPECT_FALSE(r.command(at(0, 0, 0, 0.5)).mode_switch);
  EXPECT_EQ(r.command(at(0, 0, 0, 1.0)).mode_switch, ControlMode::kPapfOnly);
  EXPECT_FALSE(r.command(at(0, 0, 0, 1.02)).mode_switch);
}

TEST(ReplayRider, EmptyLogIsStill) {
  ReplayRider r(Recording{});
  for (double t : {0.0, 1.0, 100.0}) {
    const auto c = r.command(at(0, 0, 0, t));
    EXPECT_EQ(c.intent.x, 0.0);
    EXPECT_EQ(c.intent.y, 0.0);
    EXPECT_EQ(c.yaw_rate_cmd, 0.0);
  }
}

TEST(ReplayRider, ClampsOutOfRangeSamples) {
  ReplayRider r(parse(R"({"t":0,"ix":3,"iy":-2,"yaw":-4})"));
  const auto c = r.command(at(0, 0));
  EXPECT_EQ(c.intent.x, 1.0);
  EXPECT_EQ(c.intent.y, -1.0);
  EXPECT_EQ(c.yaw_rate_cmd, -kDefaultMaxYawRate);
}

TEST(ControlMode, NamesRoundTrip) {
  for (auto m : {ControlMode::kNoSharedControl, ControlMode::kPapfOnly,
                 ControlMode::kPapfWithTracking, ControlMode::kPapfWithTrackingAndAlarm}) {
    EXPECT_EQ(parse_control_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_control_mode("papf_tracking"), ConfigError);
}

}  // namespace
}  // namespace papf::rider
