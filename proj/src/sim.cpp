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

#include "papf/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "papf/error.hpp"

namespace papf::sim {
namespace {

bool finite_axis(const plant::AxisState& a) {
  return std::isfinite(a.p) && std::isfinite(a.v) && std::isfinite(a.theta) &&
         std::isfinite(a.theta_dot) && std::isfinite(a.integral);
}

bool finite_state(const plant::PlantState& s) {
  return finite_axis(s.x_axis) && finite_axis(s.y_axis) && std::isfinite(s.yaw) &&
         std::isfinite(s.yaw_rate);
}

void require_rate(int hz, const char* key) {
  if (hz <= 0) {
    throw ConfigError(std::string("rates.") + key + " must be > 0", std::string("rates.") + key);
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream).
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Re-throws a sub-object's ConfigError with its key qualified by `prefix`.
template <class F>
void scoped(const std::string& prefix, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what(), prefix + e.key());
  }
}

}  // namespace

void EpisodeConfig::validate() const {
  if (course && wall) throw ConfigError("choose either course or wall, not both", "course");
  if (!course && !wall) throw ConfigError("episode needs a course or a wall scenario", "course");
  if (course) scoped("course.", [&] { course->validate(); });
  if (wall) {
    if (!(wall->distance > robot_radius)) {
      throw ConfigError("wall.distance must exceed the robot radius", "wall.distance");
    }
    if (!(wall->half_length > 0)) throw ConfigError("wall.half_length must be > 0", "wall.half_length");
  }
  scoped("papf.", [&] { papf.validate(); });
  scoped("plant.", [&] { plant.validate(); });
  scoped("sensor.", [&] { sensor.validate(); });
  require_rate(rates.physics_hz, "physics_hz");
  require_rate(rates.control_hz, "control_hz");
  require_rate(rates.shared_hz, "shared_hz");
  require_rate(rates.sensor_hz, "sensor_hz");
  for (auto [hz, key] : {std::pair{rates.control_hz, "control_hz"},
                         std::pair{rates.shared_hz, "shared_hz"},
                         std::pair{rates.sensor_hz, "sensor_hz"}}) {
    if (rates.physics_hz % hz != 0) {
      throw ConfigError(std::string("rates.") + key + " must divide rates.physics_hz",
                        std::string("rates.") + key);
    }
  }
  if (!(timeout > 0)) throw ConfigError("timeout must be > 0", "timeout");
  if (!(v_touch >= 0)) throw ConfigError("v_touch must be >= 0", "v_touch");
  if (!(move_weight >= 0)) throw ConfigError("move_weight must be >= 0", "move_weight");
  if (!(debounce >= 0)) throw ConfigError("debounce must be >= 0", "debounce");
  if (!(robot_radius > 0)) throw ConfigError("robot_radius must be > 0", "robot_radius");
  if (!(rider.aggressiveness > 0 && rider.aggressiveness <= 1)) {
    throw ConfigError("rider.aggressiveness must be in (0, 1]", "rider.aggressiveness");
  }
  if (!(rider.arrival_radius > 0)) {
    throw ConfigError("rider.arrival_radius must be > 0", "rider.arrival_radius");
  }
  if (!(rider.noise_std >= 0)) throw ConfigError("rider.noise_std must be >= 0", "rider.noise_std");
  if (!(rider.noise_time_constant > 0)) {
    throw ConfigError("rider.noise_time_constant must be > 0", "rider.noise_time_constant");
  }
  if (rider.kind == RiderKind::kReplay && !rider.recording) {
    throw ConfigError("replay rider needs a recording", "rider.recording");
  }
}

world::World wall_world(const WallScenario& wall) {
  world::World w;
  w.name = "WALL";
  w.segments = {{{wall.distance, -wall.half_length}, {wall.distance, wall.half_length}}};
  w.start = {{0.0, 0.0}, 0.0};
  w.finish = {{wall.distance + 1.0, -1.0}, {wall.distance + 2.0, 1.0}};
  w.route = {w.finish.center()};
  return w;
}

world::World build_world(const EpisodeConfig& cfg) {
  if (cfg.wall) return wall_world(*cfg.wall);
  if (cfg.course) return world::build_course(*cfg.course);
  throw ConfigError("episode needs a course or a wall scenario", "course");
}

std::unique_ptr<rider::Rider> make_rider(const EpisodeConfig& cfg, const world::World& world) {
  const RiderConfig& rc = cfg.rider;
  switch (rc.kind) {
    case RiderKind::kWaypoint: {
      rider::Route route;
      route.waypoints = world.route;
      if (route.waypoints.empty()) route.waypoints = {world.finish.center()};
      // The first route point is the start pose itself.
      if (route.waypoints.size() > 1 && route.waypoints.front() == world.start.position) {
        route.waypoints.erase(route.waypoints.begin());
      }
      route.arrival_radius = rc.arrival_radius;
      rider::WaypointRiderParams p;
      p.aggressiveness = rc.aggressiveness;
      p.k_lean = rc.k_lean;
      p.max_yaw_rate = rc.max_yaw_rate;
      p.noise_std = rc.noise_std;
      p.noise_time_constant = rc.noise_time_constant;
      p.seed = derive_seed(cfg.seed, 2);
      return std::make_unique<rider::WaypointRider>(std::move(route), p);
    }
    case RiderKind::kAggressive:
      return std::make_unique<rider::AggressiveRider>(rc.target.value_or(world.finish.center()),
                                                      rc.aggressiveness, rc.k_lean);
    case RiderKind::kReplay:
      return std::make_unique<rider::ReplayRider>(rc.recording.value_or(rider::Recording{}),
                                                  rc.k_lean, rc.max_yaw_rate);
  }
  throw ConfigError("unknown rider kind", "rider.kind");
}

Episode::Episode(const EpisodeConfig& cfg) : cfg_(cfg), mode_(cfg.mode) {
  cfg_.validate();
  world_ = build_world(cfg_);
  const double control_dt = 1.0 / cfg_.rates.control_hz;
  gains_ = cfg_.gains ? *cfg_.gains : plant::synthesize_gains(cfg_.plant, cfg_.lqr, control_dt);
  cfg_.sensor.seed ^= derive_seed(cfg_.seed, 1);

  control_div_ = cfg_.rates.physics_hz / cfg_.rates.control_hz;
  shared_div_ = cfg_.rates.physics_hz / cfg_.rates.shared_hz;
  sensor_div_ = cfg_.rates.physics_hz / cfg_.rates.sensor_hz;
  dt_ = 1.0 / cfg_.rates.physics_hz;
  max_steps_ = static_cast<std::uint64_t>(std::llround(cfg_.timeout * cfg_.rates.physics_hz));

  state_.x_axis.p = world_.start.position.x;
  state_.y_axis.p = world_.start.position.y;
  state_.yaw = world_.start.yaw;
  min_clearance_ = world::min_clearance(world_, state_.position(), cfg_.robot_radius);
  scan_ = world::raycast_scan(world_, state_.pose(), cfg_.sensor, scans_++, 0.0);
  if (cfg_.record_trajectory) {
    trajectory_.reserve(static_cast<std::size_t>(cfg_.timeout * cfg_.rates.shared_hz) + 2);
  }
}

double Episode::time() const { return static_cast<double>(step_) * dt_; }

void Episode::advance(rider::Rider& rider) {
  if (done_) return;
  shared_tick(rider);
  for (int i = 0; i < shared_div_ && !done_; ++i) physics_step();
}

void Episode::shared_tick(rider::Rider& rider) {
  if (pending_mode_) {
    mode_ = *pending_mode_;
    pending_mode_.reset();
  }
  const shared::NormalizedCommand v_fb = plant::feedback_velocity(state_, cfg_.plant);
  const rider::RiderCommand cmd = rider.command({state_.pose(), v_fb, time()});
  if (cmd.mode_switch) mode_ = *cmd.mode_switch;

  v_usr_ = cmd.intent;
  yaw_rate_cmd_ = cmd.yaw_rate_cmd;
  rider_torque_ = cmd.disturbance_torque;

  SimFrame frame;
  if (mode_ == ControlMode::kNoSharedControl) {
    v_cmd_ = v_usr_;
  } else {
    shared::PapfConfig papf = cfg_.papf;
    if (mode_ == ControlMode::kPapfOnly) papf.zeta = 0.0;
    const shared::SharedControlOutput out =
        shared::shared_control_step(v_usr_, scan_, v_fb, v_cmd_, papf);
    v_cmd_ = out.command;
    frame.force = out.diagnostics.force;
    if (mode_ == ControlMode::kPapfWithTrackingAndAlarm) {
      frame.alarm_level = out.diagnostics.alarm_level;
    }
  }
  frame.time = time();
  frame.state = state_;
  frame.v_usr = v_usr_;
  frame.v_cmd = v_cmd_;
  frame.contact = in_contact_;
  frame.min_clearance = world::min_clearance(world_, state_.position(), cfg_.robot_radius);
  frame.mode = mode_;
  last_frame_ = frame;
  if (cfg_.record_trajectory) trajectory_.push_back(frame);
  ++shared_ticks_;
}

void Episode::physics_step() {
  if (step_ % static_cast<std::uint64_t>(control_div_) == 0) {
    motor_torque_ =
        plant::control_torques(state_, v_cmd_, gains_, cfg_.plant, 1.0 / cfg_.rates.control_hz);
  }
  const Vec2 previous = state_.position();
  state_ = plant::integrate_rk4(state_, motor_torque_, rotate(rider_torque_, state_.yaw),
                                yaw_rate_cmd_, cfg_.plant, dt_);
  ++step_;
  state_.time = time();
  if (!finite_state(state_)) abort_non_finite();

  const world::ContactReport contact =
      world::check_collision(world_, state_.position(), state_.velocity(), cfg_.robot_radius);
  min_clearance_ = std::min(
      min_clearance_, world::min_clearance(world_, state_.position(), cfg_.robot_radius));
  if (contact.in_contact) {
    if (!in_contact_ && (!ever_contacted_ || time() - last_contact_time_ >= cfg_.debounce)) {
      if (contact.contact_speed < cfg_.v_touch) {
        ++c_t_;
      } else {
        ++c_m_;
      }
    }
    in_contact_ = true;
    ever_contacted_ = true;
    last_contact_time_ = time();
    // Walls are rigid: push the ball out and stop its inward motion.
    state_.x_axis.p += contact.normal.x * contact.penetration;
    state_.y_axis.p += contact.normal.y * contact.penetration;
    const double inward = dot(state_.velocity(), contact.normal);
    if (inward < 0.0) {
      // Plastic impact: the impulse along the normal that cancels the inward
      // ball velocity, shared by both planar channels.
      const Vec2 n = contact.normal;
      const double mobility = n.x * n.x * plant::ball_mobility(state_.x_axis, cfg_.plant) +
                              n.y * n.y * plant::ball_mobility(state_.y_axis, cfg_.plant);
      const double impulse = -inward / mobility;
      plant::apply_ball_impulse(state_.x_axis, impulse * n.x, cfg_.plant);
      plant::apply_ball_impulse(state_.y_axis, impulse * n.y, cfg_.plant);
    }
  } else {
    in_contact_ = false;
  }
  path_length_ += norm(state_.position() - previous);

  if (step_ % static_cast<std::uint64_t>(sensor_div_) == 0) {
    scan_ = world::raycast_scan(world_, state_.pose(), cfg_.sensor, scans_++, time());
  }

  if (world_.finish.contains(state_.position())) {
    finish(false);
  } else if (plant::update_fallen(state_)) {
    finish(true);
  } else if (step_ >= max_steps_) {
    finish(true);
  }
}

void Episode::finish(bool failed) {
  done_ = true;
  failed_ = failed;
  end_time_ = time();
}

void Episode::abort_non_finite() const {
  std::ostringstream os;
  os.precision(17);
  const SimFrame& f = last_frame_;
  os << "t=" << time() << " last_frame_t=" << f.time << " pos=(" << f.state.x_axis.p << ", "
     << f.state.y_axis.p << ") vel=(" << f.state.x_axis.v << ", " << f.state.y_axis.v
     << ") lean=(" << f.state.x_axis.theta << ", " << f.state.y_axis.theta << ") v_cmd=("
     << f.v_cmd.x << ", " << f.v_cmd.y << ") torque=(" << motor_torque_.x << ", "
     << motor_torque_.y << ")";
  throw NumericAbort("non-finite plant state", os.str());
}

RunMetrics Episode::metrics() const {
  RunMetrics m;
  m.t_c = done_ ? end_time_ : time();
  m.c_t = c_t_;
  m.c_m = c_m_;
  m.c_i = c_t_ + cfg_.move_weight * c_m_;
  m.failed = done_ ? failed_ : false;
  m.fallen = state_.fallen;
  m.min_clearance = min_clearance_;
  m.path_length = path_length_;
  m.mean_speed = m.t_c > 0 ? path_length_ / m.t_c : 0.0;
  return m;
}

EpisodeResult run_episode(const EpisodeConfig& cfg, rider::Rider& rider) {
  Episode episode(cfg);
  while (!episode.done()) episode.advance(rider);
  EpisodeResult res;
  res.name = cfg.name;
  res.metrics = episode.metrics();
  res.trajectory = episode.trajectory();
  res.seed = cfg.seed;
  res.mode = cfg.mode;
  res.world_name = episode.world().name;
  return res;
}

EpisodeResult run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  const world::World w = build_world(cfg);
  std::unique_ptr<rider::Rider> r = make_rider(cfg, w);
  return run_episode(cfg, *r);
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

std::string world_code(const EpisodeConfig& cfg) {
  if (cfg.course) return cfg.course->code();
  if (cfg.wall) return "WALL";
  return cfg.name;
}

std::string cell_key(const EpisodeConfig& cfg) {
  const std::string base = cfg.name.empty() ? world_code(cfg) : cfg.name;
  return base + "/" + std::string(to_string(cfg.mode));
}

struct Task {
  std::size_t config = 0;
  std::uint64_t seed = 0;
  int repetition = 0;
};

struct TaskOutcome {
  std::optional<RunMetrics> metrics;
  std::string error;
};

template <typename Get>
MetricSummary summarize_field(const std::vector<RunMetrics>& runs, Get get) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const RunMetrics& r : runs) values.push_back(get(r));
  return summarize(values);
}

void fill_summaries(BatchCell& cell) {
  const auto& r = cell.runs;
  cell.t_c = summarize_field(r, [](const RunMetrics& m) { return m.t_c; });
  cell.c_t = summarize_field(r, [](const RunMetrics& m) { return double(m.c_t); });
  cell.c_m = summarize_field(r, [](const RunMetrics& m) { return double(m.c_m); });
  cell.c_i = summarize_field(r, [](const RunMetrics& m) { return m.c_i; });
  cell.failed = summarize_field(r, [](const RunMetrics& m) { return m.failed ? 1.0 : 0.0; });
  cell.min_clearance = summarize_field(r, [](const RunMetrics& m) { return m.min_clearance; });
  cell.mean_speed = summarize_field(r, [](const RunMetrics& m) { return m.mean_speed; });
}

}  // namespace

BatchResult run_batch(const std::vector<EpisodeConfig>& configs,
                      const std::vector<std::uint64_t>& seeds, int repetitions, int jobs) {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1", "repetitions");
  if (jobs < 1) throw ConfigError("jobs must be >= 1", "jobs");
  for (const EpisodeConfig& c : configs) c.validate();

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (int rep = 0; rep < repetitions; ++rep) {
      for (std::uint64_t seed : seeds) tasks.push_back({c, seed, rep});
    }
  }
  std::vector<TaskOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      EpisodeConfig cfg = configs[tasks[i].config];
      cfg.seed = tasks[i].seed;
      cfg.record_trajectory = false;
      try {
        outcomes[i].metrics = run_episode(cfg).metrics;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Group by cell, then order runs by (seed, repetition) so aggregation is
  // independent of scheduling and of input order.
  struct Entry {
    std::uint64_t seed;
    int repetition;
    RunMetrics metrics;
  };
  std::map<std::string, std::vector<Entry>> grouped;
  std::map<std::string, BatchCell> cells;
  BatchResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const EpisodeConfig& cfg = configs[tasks[i].config];
    const std::string key = cell_key(cfg);
    BatchCell& cell = cells[key];
    cell.key = key;
    cell.course = world_code(cfg);
    cell.mode = cfg.mode;
    if (outcomes[i].metrics) {
      grouped[key].push_back({tasks[i].seed, tasks[i].repetition, *outcomes[i].metrics});
    } else {
      ++cell.aborted;
      result.failures.push_back({key, tasks[i].seed, outcomes[i].error});
    }
  }
  for (auto& [key, cell] : cells) {
    auto& entries = grouped[key];
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.seed != b.seed ? a.seed < b.seed : a.repetition < b.repetition;
    });
    for (const Entry& e : entries) {
      cell.seeds.push_back(e.seed);
      cell.runs.push_back(e.metrics);
    }
    fill_summaries(cell);
    result.cells.push_back(std::move(cell));
  }
  std::sort(result.failures.begin(), result.failures.end(),
            [](const EpisodeFailure& a, const EpisodeFailure& b) {
              return a.cell != b.cell ? a.cell < b.cell : a.seed < b.seed;
            });
  return result;
}

ModeComparison compare_modes(const EpisodeConfig& base, const std::vector<std::uint64_t>& seeds,
                             ControlMode treatment, ControlMode baseline, int jobs) {
  EpisodeConfig b = base;
  b.mode = baseline;
  EpisodeConfig t = base;
  t.mode = treatment;
  const BatchResult batch = run_batch({b, t}, seeds, 1, jobs);
  ModeComparison cmp;
  cmp.course = world_code(base);
  cmp.treatment_mode = treatment;
  for (const BatchCell& cell : batch.cells) {
    if (cell.mode == baseline) cmp.baseline = cell;
    if (cell.mode == treatment) cmp.treatment = cell;
  }
  auto ratio = [](const char* name, MetricSummary base_s, MetricSummary treat_s) {
    MetricRatio r;
    r.metric = name;
    r.baseline = base_s.mean;
    r.treatment = treat_s.mean;
    if (base_s.mean != 0.0) r.ratio = treat_s.mean / base_s.mean;
    return r;
  };
  cmp.ratios = {ratio("t_c", cmp.baseline.t_c, cmp.treatment.t_c),
                ratio("c_t", cmp.baseline.c_t, cmp.treatment.c_t),
                ratio("c_m", cmp.baseline.c_m, cmp.treatment.c_m),
                ratio("c_i", cmp.baseline.c_i, cmp.treatment.c_i)};
  std::vector<double> bt, tt;
  for (const RunMetrics& m : cmp.baseline.runs) bt.push_back(m.t_c);
  for (const RunMetrics& m : cmp.treatment.runs) tt.push_back(m.t_c);
  const double mb = median(bt);
  cmp.median_t_c_ratio = mb > 0.0 ? median(tt) / mb : 0.0;
  return cmp;
}

}  // namespace papf::sim
