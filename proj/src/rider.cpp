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

#include "papf/rider.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "papf/error.hpp"

namespace papf::rider {
namespace {

constexpr double kTaperFloor = 0.2;
constexpr double kStopTurnAngle = 0.349;  // 20 degrees
constexpr double kTimeSlack = 1e-9;

double number_field(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ParseError("recording line " + std::to_string(line) + ": missing numeric field '" +
                     key + "'");
  }
  return it->get<double>();
}

}  // namespace

RiderCommand make_command(double ix, double iy, double yaw_input, double k_lean,
                          double max_yaw_rate) {
  RiderCommand cmd;
  cmd.intent = NormalizedCommand::clamped(ix, iy);
  cmd.yaw_rate_cmd = std::clamp(yaw_input, -1.0, 1.0) * max_yaw_rate;
  cmd.disturbance_torque = {k_lean * cmd.intent.x, k_lean * cmd.intent.y};
  return cmd;
}

WaypointRider::WaypointRider(Route route, WaypointRiderParams params)
    : route_(std::move(route)), params_(params), rng_(params.seed) {
  if (route_.waypoints.empty()) throw ConfigError("route must have at least one waypoint", "route");
  if (!(route_.arrival_radius > 0)) {
    throw ConfigError("arrival_radius must be > 0", "arrival_radius");
  }
  if (!(params_.aggressiveness > 0 && params_.aggressiveness <= 1)) {
    throw ConfigError("aggressiveness must be in (0, 1]", "aggressiveness");
  }
  const auto& w = route_.waypoints;
  stop_.assign(w.size(), false);
  stop_.back() = true;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const Vec2 in = w[i] - w[i - 1];
    const Vec2 out = w[i + 1] - w[i];
    if (norm(in) == 0.0 || norm(out) == 0.0) continue;
    stop_[i] = std::abs(std::atan2(cross(in, out), dot(in, out))) > kStopTurnAngle;
  }
}

RiderCommand WaypointRider::command(const RiderObservation& obs) {
  const double r = route_.arrival_radius;
  while (index_ < route_.waypoints.size() &&
         norm(route_.waypoints[index_] - obs.pose.position) <= r) {
    ++index_;
  }
  if (complete()) return make_command(0.0, 0.0, 0.0, params_.k_lean, params_.max_yaw_rate);

  const Vec2 to_goal = route_.waypoints[index_] - obs.pose.position;
  const double dist = norm(to_goal);
  double to_stop = dist;
  for (std::size_t i = index_; !stop_[i] && to_stop < 2.0 * r; ++i) {
    to_stop += norm(route_.waypoints[i + 1] - route_.waypoints[i]);
  }
  double magnitude = params_.aggressiveness;
  if (to_stop < 2.0 * r) {
    magnitude *= kTaperFloor + (1.0 - kTaperFloor) * std::max(0.0, to_stop - r) / r;
  }

  const Vec2 body = rotate((1.0 / dist) * to_goal, -obs.pose.yaw);
  double ix = magnitude * body.x;
  double iy = magnitude * body.y;

  if (params_.noise_std > 0.0) {
    const double dt = has_time_ ? std::max(0.0, obs.time - last_time_) : 0.0;
    const double tau = params_.noise_time_constant;
    std::normal_distribution<double> n01(0.0, 1.0);
    const double decay = std::exp(-dt / tau);
    const double diffusion = params_.noise_std * std::sqrt(1.0 - decay * decay);
    wander_ = {wander_.x * decay + diffusion * n01(rng_), wander_.y * decay + diffusion * n01(rng_)};
    ix += wander_.x;
    iy += wander_.y;
  }
  last_time_ = obs.time;
  has_time_ = true;

  const double bearing = std::atan2(to_goal.y, to_goal.x);
  const double yaw_rate = std::clamp(params_.yaw_gain * wrap_angle(bearing - obs.pose.yaw),
                                     -params_.max_yaw_rate, params_.max_yaw_rate);
  RiderCommand cmd = make_command(ix, iy, 0.0, params_.k_lean, params_.max_yaw_rate);
  cmd.yaw_rate_cmd = yaw_rate;
  return cmd;
}

AggressiveRider::AggressiveRider(Vec2 target, double aggressiveness, double k_lean)
    : target_(target), aggressiveness_(aggressiveness), k_lean_(k_lean) {
  if (!(aggressiveness > 0 && aggressiveness <= 1)) {
    throw ConfigError("aggressiveness must be in (0, 1]", "aggressiveness");
  }
}

RiderCommand AggressiveRider::command(const RiderObservation& obs) {
  const Vec2 to_target = target_ - obs.pose.position;
  const double dist = norm(to_target);
  if (dist > 1e-9) last_direction_ = (1.0 / dist) * to_target;
  const Vec2 body = rotate(last_direction_, -obs.pose.yaw);
  return make_command(aggressiveness_ * body.x, aggressiveness_ * body.y, 0.0, k_lean_, 0.0);
}

Recording parse_recording(std::istream& in) {
  Recording rec;
  std::string line;
  std::size_t line_no = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("recording line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw ParseError("recording line " + std::to_string(line_no) + ": expected an object");
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      const auto version = j.find("version");
      if (version == j.end() || !version->is_number_integer() ||
          version->get<int>() != kRecordingVersion) {
        throw ParseError("recording has unsupported version (expected " +
                         std::to_string(kRecordingVersion) + ")");
      }
      if (j.contains("seed") && j["seed"].is_number_unsigned()) {
        rec.seed = j["seed"].get<std::uint64_t>();
      }
      rec.header_json = line;
      continue;
    }
    const double t = number_field(j, "t", line_no);
    if (t < last_t) {
      throw ParseError("recording line " + std::to_string(line_no) + ": time goes backwards");
    }
    last_t = t;
    if (type == "reset") {
      // The session switched episodes; later lines belong to another run.
      if (!rec.end_time) rec.end_time = t;
      break;
    }
    if (type == "end") {
      rec.end_time = t;
    } else if (j.contains("mode")) {
      if (!j["mode"].is_string()) {
        throw ParseError("recording line " + std::to_string(line_no) + ": mode must be a string");
      }
      try {
        rec.modes.push_back({t, parse_control_mode(j["mode"].get<std::string>())});
      } catch (const ConfigError& e) {
        throw ParseError("recording line " + std::to_string(line_no) + ": " + e.what());
      }
    } else if (type.empty() || type == "steer") {
      rec.samples.push_back({t, number_field(j, "ix", line_no), number_field(j, "iy", line_no),
                             number_field(j, "yaw", line_no)});
    } else {
      throw ParseError("recording line " + std::to_string(line_no) + ": unknown type '" + type +
                       "'");
    }
  }
  return rec;
}

Recording load_recording(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open recording '" + path + "'");
  return parse_recording(in);
}

ReplayRider::ReplayRider(Recording recording, double k_lean, double max_yaw_rate)
    : rec_(std::move(recording)), k_lean_(k_lean), max_yaw_rate_(max_yaw_rate) {}

RiderCommand ReplayRider::command(const RiderObservation& obs) {
  while (next_sample_ < rec_.samples.size() &&
         rec_.samples[next_sample_].t <= obs.time + kTimeSlack) {
    held_ = rec_.samples[next_sample_++];
  }
  std::optional<ControlMode> mode;
  while (next_mode_ < rec_.modes.size() && rec_.modes[next_mode_].t <= obs.time + kTimeSlack) {
    mode = rec_.modes[next_mode_++].mode;
  }
  RiderCommand cmd;
  if (rec_.end_time && obs.time > *rec_.end_time + kTimeSlack) {
    cmd = make_command(0.0, 0.0, 0.0, k_lean_, max_yaw_rate_);
  } else {
    cmd = make_command(held_.ix, held_.iy, held_.yaw, k_lean_, max_yaw_rate_);
  }
  cmd.mode_switch = mode;
  return cmd;
}

}  // namespace papf::rider
