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

#ifndef PAPF_SIM_HPP_
#define PAPF_SIM_HPP_

// Fixed-timestep orchestration: rider -> shared control -> LQR-PI cascade ->
// plant -> sensor, with collision bookkeeping and episode metrics.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "papf/control_mode.hpp"
#include "papf/plant.hpp"
#include "papf/rider.hpp"
#include "papf/shared_control.hpp"
#include "papf/world.hpp"

namespace papf::sim {

struct Rates {
  int physics_hz = 500;
  int control_hz = 250;
  int shared_hz = 50;
  int sensor_hz = 20;
};

enum class RiderKind { kWaypoint, kAggressive, kReplay };

struct RiderConfig {
  RiderKind kind = RiderKind::kWaypoint;
  double aggressiveness = 0.4;
  double k_lean = rider::kDefaultLeanTorque;
  double max_yaw_rate = rider::kDefaultMaxYawRate;
  double arrival_radius = 0.5;
  double noise_std = 0.0;
  double noise_time_constant = 1.0;
  // Aggressive rider target; defaults to the finish-region center.
  std::optional<Vec2> target;
  // Replay rider input, and the file it was loaded from (kept for export).
  std::optional<rider::Recording> recording;
  std::string recording_path;
};

// Where the world comes from: a course builder or a wall straight ahead.
struct WallScenario {
  double distance = 5.0;  // start position to the wall face, m
  double half_length = 3.0;
};

struct EpisodeConfig {
  std::string name;
  std::optional<world::CourseSpec> course;
  std::optional<WallScenario> wall;
  ControlMode mode = ControlMode::kPapfWithTracking;
  RiderConfig rider;
  shared::PapfConfig papf;
  plant::PlantParams plant;
  plant::LqrWeights lqr;
  // Overrides synthesis when present.
  std::optional<plant::ControllerGains> gains;
  world::SensorConfig sensor;
  Rates rates;
  double timeout = 120.0;      // s
  std::uint64_t seed = 0;
  double v_touch = 0.1;        // m/s, touch/move boundary
  double move_weight = 3.0;    // collision index weight of move collisions
  double debounce = 0.5;       // s of contact-free gap between two collisions
  double robot_radius = world::kDefaultRobotRadius;
  bool record_trajectory = true;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

struct RunMetrics {
  double t_c = 0.0;
  int c_t = 0;
  int c_m = 0;
  double c_i = 0.0;
  bool failed = false;
  bool fallen = false;
  double min_clearance = 0.0;
  double path_length = 0.0;
  double mean_speed = 0.0;

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct SimFrame {
  double time = 0.0;
  plant::PlantState state;
  shared::NormalizedCommand v_usr;
  shared::NormalizedCommand v_cmd;
  shared::RepulsiveForce force;
  double alarm_level = 0.0;
  bool contact = false;
  double min_clearance = 0.0;
  ControlMode mode = ControlMode::kNoSharedControl;
};

struct EpisodeResult {
  std::string name;
  RunMetrics metrics;
  std::vector<SimFrame> trajectory;
  std::uint64_t seed = 0;
  ControlMode mode = ControlMode::kNoSharedControl;
  std::string world_name;
};

// Splits a master seed into independent stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

world::World build_world(const EpisodeConfig& cfg);
world::World wall_world(const WallScenario& wall);

std::unique_ptr<rider::Rider> make_rider(const EpisodeConfig& cfg, const world::World& world);

// Incremental episode. `advance` runs one shared-control period; the rider is
// queried once at its start, so commands are held (ZOH) across the period.
class Episode {
 public:
  explicit Episode(const EpisodeConfig& cfg);

  void advance(rider::Rider& rider);
  bool done() const { return done_; }

  // Takes effect at the next shared-control tick.
  void set_mode(ControlMode mode) { pending_mode_ = mode; }
  ControlMode mode() const { return mode_; }

  double time() const;
  RunMetrics metrics() const;
  const std::vector<SimFrame>& trajectory() const { return trajectory_; }
  const SimFrame& last_frame() const { return last_frame_; }
  const plant::PlantState& state() const { return state_; }
  const shared::ObstacleScan& scan() const { return scan_; }
  const world::World& world() const { return world_; }
  const EpisodeConfig& config() const { return cfg_; }
  const plant::ControllerGains& gains() const { return gains_; }
  std::uint64_t tick() const { return shared_ticks_; }

 private:
  void physics_step();
  void shared_tick(rider::Rider& rider);
  void finish(bool failed);
  [[noreturn]] void abort_non_finite() const;

  EpisodeConfig cfg_;
  world::World world_;
  plant::ControllerGains gains_;
  plant::PlantState state_;
  shared::ObstacleScan scan_;
  ControlMode mode_;
  std::optional<ControlMode> pending_mode_;

  int control_div_ = 1;
  int shared_div_ = 1;
  int sensor_div_ = 1;
  double dt_ = 0.0;
  std::uint64_t step_ = 0;
  std::uint64_t shared_ticks_ = 0;
  std::uint64_t scans_ = 0;
  std::uint64_t max_steps_ = 0;

  shared::NormalizedCommand v_usr_;
  shared::NormalizedCommand v_cmd_;
  double yaw_rate_cmd_ = 0.0;
  Vec2 rider_torque_;
  Vec2 motor_torque_;

  // Collision bookkeeping.
  bool in_contact_ = false;
  bool ever_contacted_ = false;
  double last_contact_time_ = 0.0;
  int c_t_ = 0;
  int c_m_ = 0;
  double min_clearance_ = 0.0;
  double path_length_ = 0.0;

  bool done_ = false;
  bool failed_ = false;
  double end_time_ = 0.0;

  SimFrame last_frame_;
  std::vector<SimFrame> trajectory_;
};

EpisodeResult run_episode(const EpisodeConfig& cfg);
EpisodeResult run_episode(const EpisodeConfig& cfg, rider::Rider& rider);

// ---- batch experiments ----

struct MetricSummary {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct EpisodeFailure {
  std::string cell;
  std::uint64_t seed = 0;
  std::string message;
};

struct BatchCell {
  std::string key;  // e.g. "STN/papf-tracking"
  std::string course;
  ControlMode mode = ControlMode::kNoSharedControl;
  std::vector<std::uint64_t> seeds;
  std::vector<RunMetrics> runs;  // sorted by seed
  MetricSummary t_c, c_t, c_m, c_i, failed, min_clearance, mean_speed;
  std::size_t aborted = 0;
};

struct BatchResult {
  std::vector<BatchCell> cells;  // sorted by key
  std::vector<EpisodeFailure> failures;
};

MetricSummary summarize(const std::vector<double>& values);

// Runs every config once per seed (repetitions re-run the same seed list).
// `jobs` bounds worker threads. Results are independent of jobs and of the
// order of configs and seeds.
BatchResult run_batch(const std::vector<EpisodeConfig>& configs,
                      const std::vector<std::uint64_t>& seeds, int repetitions = 1, int jobs = 1);

struct MetricRatio {
  std::string metric;
  double baseline = 0.0;    // NoSharedControl mean
  double treatment = 0.0;   // shared-control mean
  std::optional<double> ratio;  // empty when the baseline is zero
};

struct ModeComparison {
  std::string course;
  ControlMode treatment_mode = ControlMode::kPapfWithTracking;
  std::vector<MetricRatio> ratios;  // t_c, c_t, c_m, c_i
  double median_t_c_ratio = 0.0;
  BatchCell baseline;
  BatchCell treatment;
};

// Runs NoSharedControl and `treatment` on identical seeds.
ModeComparison compare_modes(const EpisodeConfig& base, const std::vector<std::uint64_t>& seeds,
                             ControlMode treatment = ControlMode::kPapfWithTracking,
                             ControlMode baseline = ControlMode::kNoSharedControl, int jobs = 1);

double median(std::vector<double> values);

}  // namespace papf::sim

#endif  // PAPF_SIM_HPP_
