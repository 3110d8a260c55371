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

#include "papf/io.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "papf/error.hpp"

namespace papf::io {

using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Export helpers

std::string fixed(double v, int digits) {
  // Tiny negatives round to "-0.00"; drop the sign so zero prints one way.
  std::string s = fmt::format("{:.{}f}", v, digits);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

Json frame_json(const sim::SimFrame& f) {
  Json j;
  j["time"] = f.time;
  j["x"] = f.state.x_axis.p;
  j["y"] = f.state.y_axis.p;
  j["yaw"] = f.state.yaw;
  j["vx"] = f.state.x_axis.v;
  j["vy"] = f.state.y_axis.v;
  j["yaw_rate"] = f.state.yaw_rate;
  j["theta_x"] = f.state.x_axis.theta;
  j["theta_y"] = f.state.y_axis.theta;
  j["v_usr_x"] = f.v_usr.x;
  j["v_usr_y"] = f.v_usr.y;
  j["v_cmd_x"] = f.v_cmd.x;
  j["v_cmd_y"] = f.v_cmd.y;
  j["force_x"] = f.force.fx;
  j["force_y"] = f.force.fy;
  j["alarm_level"] = f.alarm_level;
  j["contact"] = f.contact;
  j["min_clearance"] = f.min_clearance;
  j["mode"] = std::string(to_string(f.mode));
  return j;
}

// ---------------------------------------------------------------------------
// Strict JSON reader. Every object is wrapped in a Reader that remembers
// which keys were consumed; finish() rejects the rest.

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message, path);
}

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const Json* find(std::string_view key) {
    const auto it = j_.find(std::string(key));
    if (it == j_.end()) return nullptr;
    used_.insert(std::string(key));
    return &*it;
  }

  std::string path(std::string_view key) const { return join(path_, key); }

  void number(std::string_view key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) fail(path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(std::string_view key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) fail(path(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void unsigned_integer(std::string_view key, std::uint64_t& out) {
    if (const Json* v = find(key)) out = as_seed(*v, path(key));
  }

  void boolean(std::string_view key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) fail(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(std::string_view key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) fail(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  // Parses a string field with `parse`, re-keying its ConfigError.
  template <class T, class Parse>
  void parsed(std::string_view key, T& out, Parse parse) {
    std::string text;
    if (!find(key)) return;
    string(key, text);
    try {
      out = parse(text);
    } catch (const ConfigError& e) {
      fail(path(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(path(it.key()), "unknown key");
    }
  }

  static std::uint64_t as_seed(const Json& v, const std::string& where) {
    if (!v.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

shared::GateMode parse_gate(const std::string& s) {
  if (s == "decelerate-only") return shared::GateMode::kDecelerateOnly;
  if (s == "literal") return shared::GateMode::kLiteral;
  throw ConfigError("unknown gate mode '" + s + "'", "gate_mode");
}

std::string gate_name(shared::GateMode g) {
  return g == shared::GateMode::kLiteral ? "literal" : "decelerate-only";
}

plant::Discretization parse_discretization(const std::string& s) {
  if (s == "zoh") return plant::Discretization::kZeroOrderHold;
  if (s == "euler") return plant::Discretization::kEuler;
  throw ConfigError("unknown discretization '" + s + "'", "discretization");
}

std::string discretization_name(plant::Discretization d) {
  return d == plant::Discretization::kEuler ? "euler" : "zoh";
}

sim::RiderKind parse_rider_kind(const std::string& s) {
  if (s == "waypoint") return sim::RiderKind::kWaypoint;
  if (s == "aggressive") return sim::RiderKind::kAggressive;
  if (s == "replay") return sim::RiderKind::kReplay;
  throw ConfigError("unknown rider kind '" + s + "'", "kind");
}

std::string rider_kind_name(sim::RiderKind k) {
  switch (k) {
    case sim::RiderKind::kWaypoint: return "waypoint";
    case sim::RiderKind::kAggressive: return "aggressive";
    case sim::RiderKind::kReplay: return "replay";
  }
  return "waypoint";
}

world::CourseSpec read_course(const Json& j, const std::string& path, double robot_radius) {
  world::CourseSpec spec;
  if (j.is_string()) {
    try {
      spec = world::parse_course_code(j.get<std::string>());
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  } else {
    Reader r(j, path);
    r.parsed("kind", spec.kind, [](const std::string& s) { return world::parse_course_kind(s); });
    r.parsed("variant", spec.variant,
             [](const std::string& s) { return world::parse_course_variant(s); });
    r.number("corridor_width", spec.corridor_width);
    r.number("wall_length", spec.wall_length);
    r.unsigned_integer("seed", spec.seed);
    r.integer("clutter", spec.clutter);
    r.finish();
  }
  spec.robot_radius = robot_radius;
  return spec;
}

Vec2 read_point(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(path, "expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void read_rider(const Json& j, const std::string& path, const std::string& base_dir,
                sim::RiderConfig& rider) {
  Reader r(j, path);
  r.parsed("kind", rider.kind, parse_rider_kind);
  r.number("aggressiveness", rider.aggressiveness);
  r.number("k_lean", rider.k_lean);
  r.number("max_yaw_rate", rider.max_yaw_rate);
  r.number("arrival_radius", rider.arrival_radius);
  r.number("noise_std", rider.noise_std);
  r.number("noise_time_constant", rider.noise_time_constant);
  if (const Json* t = r.find("target")) rider.target = read_point(*t, r.path("target"));
  r.string("recording", rider.recording_path);
  r.finish();
  if (!rider.recording_path.empty()) {
    std::filesystem::path p(rider.recording_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    try {
      rider.recording = rider::load_recording(p.string());
    } catch (const ParseError& e) {
      fail(r.path("recording"), e.what());
    }
  }
}

void read_papf(const Json& j, const std::string& path, shared::PapfConfig& c) {
  Reader r(j, path);
  r.number("eta_x", c.eta_x);
  r.number("eta_y", c.eta_y);
  r.number("delta_thre", c.delta_thre);
  r.number("zeta", c.zeta);
  r.number("epsilon", c.epsilon);
  r.number("corridor_half_width", c.corridor_half_width);
  r.number("v_max", c.v_max);
  r.number("alarm_on_dist", c.alarm_on_dist);
  r.number("alarm_full_dist", c.alarm_full_dist);
  r.parsed("gate_mode", c.gate_mode, parse_gate);
  r.finish();
}

void read_plant(const Json& j, const std::string& path, plant::PlantParams& p) {
  Reader r(j, path);
  r.number("ball_radius", p.ball_radius);
  r.number("ball_mass", p.ball_mass);
  r.number("body_mass", p.body_mass);
  r.number("rider_mass", p.rider_mass);
  r.number("com_height", p.com_height);
  r.number("body_inertia", p.body_inertia);
  r.number("gravity", p.gravity);
  r.number("viscous_friction", p.viscous_friction);
  r.number("v_max", p.v_max);
  r.number("yaw_time_constant", p.yaw_time_constant);
  r.finish();
}

void read_four(const Json& j, const std::string& path, std::array<double, 4>& out) {
  if (!j.is_array() || j.size() != 4) fail(path, "expected an array of 4 numbers");
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out[i] = j[i].get<double>();
  }
}

void read_lqr(const Json& j, const std::string& path, plant::LqrWeights& w) {
  Reader r(j, path);
  if (const Json* q = r.find("q")) read_four(*q, r.path("q"), w.q);
  r.number("r", w.r);
  r.parsed("discretization", w.discretization, parse_discretization);
  r.finish();
}

// Overrides on top of `g`, which holds synthesized gains.
void read_gains(const Json& j, const std::string& path, plant::ControllerGains& g) {
  Reader r(j, path);
  if (const Json* k = r.find("lqr_k")) read_four(*k, r.path("lqr_k"), g.lqr_k);
  r.number("pi_kp", g.pi_kp);
  r.number("pi_ki", g.pi_ki);
  r.number("integrator_limit", g.integrator_limit);
  r.number("lean_ref_limit", g.lean_ref_limit);
  r.number("reference_bandwidth", g.reference_bandwidth);
  r.number("accel_limit", g.accel_limit);
  r.number("jerk_limit", g.jerk_limit);
  r.finish();
  for (auto [v, key] : {std::pair{g.integrator_limit, "integrator_limit"},
                        std::pair{g.lean_ref_limit, "lean_ref_limit"},
                        std::pair{g.reference_bandwidth, "reference_bandwidth"},
                        std::pair{g.accel_limit, "accel_limit"},
                        std::pair{g.jerk_limit, "jerk_limit"}}) {
    if (!(v > 0)) fail(join(path, key), "must be > 0");
  }
}

void read_sensor(const Json& j, const std::string& path, world::SensorConfig& s) {
  Reader r(j, path);
  r.number("max_range", s.max_range);
  r.number("angular_resolution", s.angular_resolution);
  r.number("fov", s.fov);
  r.number("range_noise_std", s.range_noise_std);
  r.number("dropout_prob", s.dropout_prob);
  r.unsigned_integer("seed", s.seed);
  r.finish();
}

void read_rates(const Json& j, const std::string& path, sim::Rates& rates) {
  Reader r(j, path);
  r.integer("physics_hz", rates.physics_hz);
  r.integer("control_hz", rates.control_hz);
  r.integer("shared_hz", rates.shared_hz);
  r.integer("sensor_hz", rates.sensor_hz);
  r.finish();
}

sim::EpisodeConfig read_episode(const Json& j, const std::string& path,
                                const std::string& base_dir) {
  sim::EpisodeConfig cfg;
  Reader r(j, path);
  r.string("name", cfg.name);
  // Scalars first: the course inherits robot_radius.
  r.number("robot_radius", cfg.robot_radius);
  r.number("timeout", cfg.timeout);
  r.unsigned_integer("seed", cfg.seed);
  r.number("v_touch", cfg.v_touch);
  r.number("move_weight", cfg.move_weight);
  r.number("debounce", cfg.debounce);
  r.boolean("record_trajectory", cfg.record_trajectory);
  r.parsed("mode", cfg.mode, [](const std::string& s) { return parse_control_mode(s); });
  if (const Json* c = r.find("course")) cfg.course = read_course(*c, r.path("course"), cfg.robot_radius);
  if (const Json* w = r.find("wall")) {
    Reader wr(*w, r.path("wall"));
    sim::WallScenario wall;
    wr.number("distance", wall.distance);
    wr.number("half_length", wall.half_length);
    wr.finish();
    cfg.wall = wall;
  }
  if (const Json* v = r.find("rider")) read_rider(*v, r.path("rider"), base_dir, cfg.rider);
  if (const Json* v = r.find("papf")) read_papf(*v, r.path("papf"), cfg.papf);
  if (const Json* v = r.find("plant")) read_plant(*v, r.path("plant"), cfg.plant);
  if (const Json* v = r.find("lqr")) read_lqr(*v, r.path("lqr"), cfg.lqr);
  if (const Json* v = r.find("sensor")) read_sensor(*v, r.path("sensor"), cfg.sensor);
  if (const Json* v = r.find("rates")) read_rates(*v, r.path("rates"), cfg.rates);
  const Json* gains = r.find("gains");
  r.finish();

  // Validate before synthesis so bad plant values are reported by key rather
  // than as a synthesis failure.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(join(path, e.what()), join(path, e.key()));
  }
  if (gains) {
    plant::ControllerGains g;
    try {
      g = plant::synthesize_gains(cfg.plant, cfg.lqr, 1.0 / cfg.rates.control_hz);
    } catch (const SynthesisError& e) {
      fail(join(path, "lqr"), e.what());
    }
    read_gains(*gains, join(path, "gains"), g);
    cfg.gains = g;
  }
  return cfg;
}

BatchMatrix read_batch(const Json& j, const std::string& path, double robot_radius) {
  BatchMatrix m;
  Reader r(j, path);
  const Json* modes = r.find("modes");
  if (!modes) fail(r.path("modes"), "required");
  if (!modes->is_array() || modes->empty()) fail(r.path("modes"), "expected a non-empty array");
  for (std::size_t i = 0; i < modes->size(); ++i) {
    const std::string where = r.path("modes") + "[" + std::to_string(i) + "]";
    if (!(*modes)[i].is_string()) fail(where, "expected a mode name");
    try {
      m.modes.push_back(parse_control_mode((*modes)[i].get<std::string>()));
    } catch (const ConfigError& e) {
      fail(where, e.what());
    }
  }
  if (const Json* courses = r.find("courses")) {
    if (!courses->is_array()) fail(r.path("courses"), "expected an array");
    for (std::size_t i = 0; i < courses->size(); ++i) {
      m.courses.push_back(read_course((*courses)[i],
                                      r.path("courses") + "[" + std::to_string(i) + "]",
                                      robot_radius));
    }
  }
  // Seeds are mandatory: a batch never picks its own.
  const Json* seeds = r.find("seeds");
  if (!seeds) fail(r.path("seeds"), "required");
  if (!seeds->is_array() || seeds->empty()) fail(r.path("seeds"), "expected a non-empty array");
  for (std::size_t i = 0; i < seeds->size(); ++i) {
    m.seeds.push_back(
        Reader::as_seed((*seeds)[i], r.path("seeds") + "[" + std::to_string(i) + "]"));
  }
  r.integer("repetitions", m.repetitions);
  if (m.repetitions < 1) fail(r.path("repetitions"), "must be >= 1");
  r.finish();
  return m;
}

Json course_json(const world::CourseSpec& c) {
  Json j;
  j["kind"] = std::string(world::to_string(c.kind));
  j["variant"] = std::string(world::to_string(c.variant));
  j["corridor_width"] = c.corridor_width;
  j["wall_length"] = c.wall_length;
  j["seed"] = c.seed;
  j["clutter"] = c.clutter;
  return j;
}

Json episode_json(const sim::EpisodeConfig& c) {
  Json j;
  if (!c.name.empty()) j["name"] = c.name;
  if (c.course) j["course"] = course_json(*c.course);
  if (c.wall) j["wall"] = {{"distance", c.wall->distance}, {"half_length", c.wall->half_length}};
  j["mode"] = std::string(to_string(c.mode));
  Json rider;
  rider["kind"] = rider_kind_name(c.rider.kind);
  rider["aggressiveness"] = c.rider.aggressiveness;
  rider["k_lean"] = c.rider.k_lean;
  rider["max_yaw_rate"] = c.rider.max_yaw_rate;
  rider["arrival_radius"] = c.rider.arrival_radius;
  rider["noise_std"] = c.rider.noise_std;
  rider["noise_time_constant"] = c.rider.noise_time_constant;
  if (c.rider.target) rider["target"] = {c.rider.target->x, c.rider.target->y};
  if (!c.rider.recording_path.empty()) rider["recording"] = c.rider.recording_path;
  j["rider"] = rider;
  const auto& p = c.papf;
  j["papf"] = {{"eta_x", p.eta_x},
               {"eta_y", p.eta_y},
               {"delta_thre", p.delta_thre},
               {"zeta", p.zeta},
               {"epsilon", p.epsilon},
               {"corridor_half_width", p.corridor_half_width},
               {"v_max", p.v_max},
               {"alarm_on_dist", p.alarm_on_dist},
               {"alarm_full_dist", p.alarm_full_dist},
               {"gate_mode", gate_name(p.gate_mode)}};
  const auto& pl = c.plant;
  j["plant"] = {{"ball_radius", pl.ball_radius},
                {"ball_mass", pl.ball_mass},
                {"body_mass", pl.body_mass},
                {"rider_mass", pl.rider_mass},
                {"com_height", pl.com_height},
                {"body_inertia", pl.body_inertia},
                {"gravity", pl.gravity},
                {"viscous_friction", pl.viscous_friction},
                {"v_max", pl.v_max},
                {"yaw_time_constant", pl.yaw_time_constant}};
  j["lqr"] = {{"q", c.lqr.q}, {"r", c.lqr.r},
              {"discretization", discretization_name(c.lqr.discretization)}};
  if (c.gains) {
    const auto& g = *c.gains;
    j["gains"] = {{"lqr_k", g.lqr_k},
                  {"pi_kp", g.pi_kp},
                  {"pi_ki", g.pi_ki},
                  {"integrator_limit", g.integrator_limit},
                  {"lean_ref_limit", g.lean_ref_limit},
                  {"reference_bandwidth", g.reference_bandwidth},
                  {"accel_limit", g.accel_limit},
                  {"jerk_limit", g.jerk_limit}};
  }
  const auto& s = c.sensor;
  j["sensor"] = {{"max_range", s.max_range},
                 {"angular_resolution", s.angular_resolution},
                 {"fov", s.fov},
                 {"range_noise_std", s.range_noise_std},
                 {"dropout_prob", s.dropout_prob},
                 {"seed", s.seed}};
  j["rates"] = {{"physics_hz", c.rates.physics_hz},
                {"control_hz", c.rates.control_hz},
                {"shared_hz", c.rates.shared_hz},
                {"sensor_hz", c.rates.sensor_hz}};
  j["timeout"] = c.timeout;
  j["seed"] = c.seed;
  j["v_touch"] = c.v_touch;
  j["move_weight"] = c.move_weight;
  j["debounce"] = c.debounce;
  j["robot_radius"] = c.robot_radius;
  j["record_trajectory"] = c.record_trajectory;
  return j;
}

}  // namespace

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> columns = {
      "time",    "x",       "y",       "yaw",     "vx",          "vy",
      "yaw_rate", "theta_x", "theta_y", "v_usr_x", "v_usr_y",     "v_cmd_x",
      "v_cmd_y", "force_x", "force_y", "alarm_level", "contact", "min_clearance",
      "mode"};
  return columns;
}

void write_trajectory_csv(std::ostream& out, const sim::EpisodeResult& result) {
  out << kVersionLine << '\n';
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const sim::SimFrame& f : result.trajectory) {
    const auto& s = f.state;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       fixed(f.time, 4), fixed(s.x_axis.p, 6), fixed(s.y_axis.p, 6),
                       fixed(s.yaw, 6), fixed(s.x_axis.v, 6), fixed(s.y_axis.v, 6),
                       fixed(s.yaw_rate, 6), fixed(s.x_axis.theta, 6), fixed(s.y_axis.theta, 6),
                       fixed(f.v_usr.x, 6), fixed(f.v_usr.y, 6), fixed(f.v_cmd.x, 6),
                       fixed(f.v_cmd.y, 6), fixed(f.force.fx, 6), fixed(f.force.fy, 6),
                       fixed(f.alarm_level, 6), f.contact ? 1 : 0, fixed(f.min_clearance, 6),
                       to_string(f.mode));
  }
}

void write_trajectory_jsonl(std::ostream& out, const sim::EpisodeResult& result) {
  Json header;
  header["type"] = "header";
  header["format"] = std::string(kVersionLine.substr(2));
  header["name"] = result.name;
  header["world"] = result.world_name;
  header["seed"] = result.seed;
  out << header.dump() << '\n';
  for (const sim::SimFrame& f : result.trajectory) out << frame_json(f).dump() << '\n';
}

std::string metrics_json(const sim::EpisodeResult& result) {
  const sim::RunMetrics& m = result.metrics;
  Json j;
  j["name"] = result.name;
  j["world"] = result.world_name;
  j["mode"] = std::string(to_string(result.mode));
  j["seed"] = result.seed;
  j["t_c"] = m.t_c;
  j["c_t"] = m.c_t;
  j["c_m"] = m.c_m;
  j["c_i"] = m.c_i;
  j["failed"] = m.failed;
  j["fallen"] = m.fallen;
  j["min_clearance"] = m.min_clearance;
  j["path_length"] = m.path_length;
  j["mean_speed"] = m.mean_speed;
  return j.dump(2) + "\n";
}

namespace {

struct SummaryRow {
  const char* label;
  sim::MetricSummary sim::BatchCell::*field;
};

constexpr SummaryRow kSummaryRows[] = {
    {"T_c", &sim::BatchCell::t_c},
    {"C_t", &sim::BatchCell::c_t},
    {"C_m", &sim::BatchCell::c_m},
    {"C_i", &sim::BatchCell::c_i},
    {"failed", &sim::BatchCell::failed},
    {"min_clearance", &sim::BatchCell::min_clearance},
    {"mean_speed", &sim::BatchCell::mean_speed},
};

// Commas and quotes cannot appear in cell keys, but failure messages are free
// text.
std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

void write_summary_csv(std::ostream& out, const sim::BatchResult& batch) {
  out << kVersionLine << '\n' << "metric";
  for (const auto& cell : batch.cells) out << ',' << cell.key << " mean," << cell.key << " se";
  out << '\n';
  for (const SummaryRow& row : kSummaryRows) {
    out << row.label;
    for (const auto& cell : batch.cells) {
      const sim::MetricSummary& s = cell.*row.field;
      out << ',' << fixed(s.mean, 4) << ',' << fixed(s.standard_error, 4);
    }
    out << '\n';
  }
  out << "episodes";
  for (const auto& cell : batch.cells) out << ',' << cell.runs.size() << ',';
  out << "\naborted";
  for (const auto& cell : batch.cells) out << ',' << cell.aborted << ',';
  out << '\n';
  if (!batch.failures.empty()) {
    out << "# failures\ncell,seed,message\n";
    for (const auto& f : batch.failures) {
      out << f.cell << ',' << f.seed << ',' << csv_quote(f.message) << '\n';
    }
  }
}

std::string summary_table(const sim::BatchResult& batch) {
  std::size_t width = 18;
  for (const auto& cell : batch.cells) width = std::max(width, cell.key.size() + 2);
  std::string text = fmt::format("{:<14}", "metric");
  for (const auto& cell : batch.cells) text += fmt::format("{:>{}}", cell.key, width);
  text += '\n';
  for (const SummaryRow& row : kSummaryRows) {
    text += fmt::format("{:<14}", row.label);
    for (const auto& cell : batch.cells) {
      const sim::MetricSummary& s = cell.*row.field;
      text += fmt::format("{:>{}}", fixed(s.mean, 2) + " +/- " + fixed(s.standard_error, 2), width);
    }
    text += '\n';
  }
  text += fmt::format("{:<14}", "episodes");
  for (const auto& cell : batch.cells) text += fmt::format("{:>{}}", cell.runs.size(), width);
  text += '\n';
  if (!batch.failures.empty()) {
    text += "failures:\n";
    for (const auto& f : batch.failures) {
      text += fmt::format("  {} seed {}: {}\n", f.cell, f.seed, f.message);
    }
  }
  return text;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ExperimentFile parse_experiment(std::string_view json_text, const std::string& base_dir) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<root>");
  }
  ExperimentFile exp;
  Reader r(root, "");
  const Json* episode = r.find("episode");
  if (!episode) fail("episode", "required");
  exp.episode = read_episode(*episode, "episode", base_dir);
  if (const Json* batch = r.find("batch")) {
    exp.batch = read_batch(*batch, "batch", exp.episode.robot_radius);
  }
  if (const Json* output = r.find("output")) {
    Reader o(*output, "output");
    o.string("trajectory_csv", exp.output.trajectory_csv);
    o.string("trajectory_jsonl", exp.output.trajectory_jsonl);
    o.string("metrics_json", exp.output.metrics_json);
    o.string("summary_csv", exp.output.summary_csv);
    o.finish();
  }
  r.finish();
  if (exp.batch) {
    // Validate every cell up front so a bad course fails before any run.
    for (const sim::EpisodeConfig& cell : expand_batch(exp)) {
      try {
        cell.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("batch: ") + e.what(), "batch." + e.key());
      }
    }
  }
  return exp;
}

ExperimentFile load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read experiment file '" + path + "'", path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_experiment(buf.str(), dir);
}

std::string experiment_to_json(const ExperimentFile& experiment) {
  Json root;
  root["episode"] = episode_json(experiment.episode);
  if (experiment.batch) {
    const BatchMatrix& m = *experiment.batch;
    Json b;
    b["modes"] = Json::array();
    for (ControlMode mode : m.modes) b["modes"].push_back(std::string(to_string(mode)));
    if (!m.courses.empty()) {
      b["courses"] = Json::array();
      for (const auto& c : m.courses) b["courses"].push_back(course_json(c));
    }
    b["seeds"] = m.seeds;
    b["repetitions"] = m.repetitions;
    root["batch"] = b;
  }
  const OutputPaths& o = experiment.output;
  Json out = Json::object();
  if (!o.trajectory_csv.empty()) out["trajectory_csv"] = o.trajectory_csv;
  if (!o.trajectory_jsonl.empty()) out["trajectory_jsonl"] = o.trajectory_jsonl;
  if (!o.metrics_json.empty()) out["metrics_json"] = o.metrics_json;
  if (!o.summary_csv.empty()) out["summary_csv"] = o.summary_csv;
  if (!out.empty()) root["output"] = out;
  return root.dump(2) + "\n";
}

std::vector<sim::EpisodeConfig> expand_batch(const ExperimentFile& experiment) {
  if (!experiment.batch) return {experiment.episode};
  std::vector<sim::EpisodeConfig> configs;
  const BatchMatrix& m = *experiment.batch;
  const auto add_modes = [&](sim::EpisodeConfig base) {
    for (ControlMode mode : m.modes) {
      base.mode = mode;
      // Batches never keep per-frame trajectories.
      base.record_trajectory = false;
      configs.push_back(base);
    }
  };
  if (m.courses.empty()) {
    add_modes(experiment.episode);
  } else {
    for (const world::CourseSpec& course : m.courses) {
      sim::EpisodeConfig base = experiment.episode;
      base.course = course;
      base.wall.reset();
      base.name.clear();
      add_modes(base);
    }
  }
  return configs;
}

}  // namespace papf::io
