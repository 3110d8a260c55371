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

#ifndef PAPF_RIDER_HPP_
#define PAPF_RIDER_HPP_

// Scripted stand-ins for the human rider. Each produces a normalized intent
// (robot frame), a yaw-rate command and the torque the rider's lean applies
// to the body (k_lean * intent).

#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "papf/control_mode.hpp"
#include "papf/geometry.hpp"
#include "papf/shared_control.hpp"

namespace papf::rider {

using shared::NormalizedCommand;

inline constexpr double kDefaultLeanTorque = 20.0;  // N m at full intent
inline constexpr double kDefaultMaxYawRate = 1.0;   // rad/s at full yaw input

struct RiderCommand {
  NormalizedCommand intent;
  double yaw_rate_cmd = 0.0;
  Vec2 disturbance_torque;  // robot frame, N m
  // Mode change requested together with this command (replayed sessions).
  std::optional<ControlMode> mode_switch;
};

struct RiderObservation {
  Pose2 pose;
  NormalizedCommand v_fb;
  double time = 0.0;
};

struct Route {
  std::vector<Vec2> waypoints;
  double arrival_radius = 0.5;
};

class Rider {
 public:
  virtual ~Rider() = default;
  virtual RiderCommand command(const RiderObservation& obs) = 0;
};

struct WaypointRiderParams {
  double aggressiveness = 0.4;  // (0, 1]
  double k_lean = kDefaultLeanTorque;
  double yaw_gain = 2.0;  // 1/s
  double max_yaw_rate = kDefaultMaxYawRate;
  // Ornstein-Uhlenbeck wander added to the intent; 0 disables it.
  double noise_std = 0.0;
  double noise_time_constant = 1.0;  // s
  std::uint64_t seed = 0;
};

// Heads for the current waypoint, turning to face it. Intent magnitude is the
// aggressiveness, tapered linearly from full at 2r to 0.2 at r (r = arrival
// radius) of the next stop, measured along the route. Stops are the last
// waypoint and every waypoint where the route turns by more than 20 degrees,
// so intermediate points on a straight leg do not slow the rider. Advances
// within r; zero intent after the last waypoint.
class WaypointRider final : public Rider {
 public:
  WaypointRider(Route route, WaypointRiderParams params);
  RiderCommand command(const RiderObservation& obs) override;

  std::size_t current_index() const { return index_; }
  bool is_stop(std::size_t i) const { return stop_[i]; }
  bool complete() const { return index_ >= route_.waypoints.size(); }

 private:
  Route route_;
  WaypointRiderParams params_;
  std::vector<bool> stop_;
  std::size_t index_ = 0;
  std::mt19937_64 rng_;
  Vec2 wander_;
  double last_time_ = 0.0;
  bool has_time_ = false;
};

// Pushes at constant magnitude toward a fixed target and never yields.
class AggressiveRider final : public Rider {
 public:
  AggressiveRider(Vec2 target, double aggressiveness, double k_lean = kDefaultLeanTorque);
  RiderCommand command(const RiderObservation& obs) override;

 private:
  Vec2 target_;
  double aggressiveness_;
  double k_lean_;
  Vec2 last_direction_{1.0, 0.0};  // world frame
};

// Command log: JSON lines. A header {"type":"header","version":1,...} is
// optional; steer samples are {"t","ix","iy","yaw"} with yaw in [-1, 1];
// mode events are {"t","mode"}; an optional {"type":"end","t"} closes it. A
// {"type":"reset"} line ends the replayable part: it acts as the end marker
// and everything after it is ignored.
inline constexpr int kRecordingVersion = 1;

struct SteerSample {
  double t = 0.0;
  double ix = 0.0;
  double iy = 0.0;
  double yaw = 0.0;
};

struct ModeEvent {
  double t = 0.0;
  ControlMode mode = ControlMode::kNoSharedControl;
};

struct Recording {
  std::vector<SteerSample> samples;
  std::vector<ModeEvent> modes;
  std::optional<double> end_time;
  std::optional<std::uint64_t> seed;
  std::string header_json;  // raw header line, if any
};

// Throws ParseError on malformed lines, non-monotone time or an unknown
// version.
Recording parse_recording(std::istream& in);
Recording load_recording(const std::string& path);

// Zero-order-hold playback of a recording. Before the first sample and after
// `end_time` the intent is zero.
class ReplayRider final : public Rider {
 public:
  explicit ReplayRider(Recording recording, double k_lean = kDefaultLeanTorque,
                       double max_yaw_rate = kDefaultMaxYawRate);
  RiderCommand command(const RiderObservation& obs) override;

 private:
  Recording rec_;
  double k_lean_;
  double max_yaw_rate_;
  std::size_t next_sample_ = 0;
  std::size_t next_mode_ = 0;
  SteerSample held_;
};

// Builds a command from a normalized intent and yaw input.
RiderCommand make_command(double ix, double iy, double yaw_input, double k_lean,
                          double max_yaw_rate);

}  // namespace papf::rider

#endif  // PAPF_RIDER_HPP_
