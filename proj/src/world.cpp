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

#include "papf/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "json.hpp"
#include "papf/error.hpp"

namespace papf::world {
namespace {

constexpr double kStartOffset = 0.8;    // start pose ahead of the back wall, m
constexpr double kRouteSpacing = 0.5;  // max gap between consecutive route points, m
constexpr double kFinishDepth = 1.0;    // finish region length, m
constexpr double kBumpLength = 0.3;     // clutter bump length along the wall, m

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return {v.x / n, v.y / n};
}

Vec2 left_normal(Vec2 dir) { return {-dir.y, dir.x}; }

// Offsets an open polyline by `offset` to its left (negative: right) using
// miter joins, so the perpendicular distance to every leg is |offset|.
std::vector<Vec2> offset_polyline(const std::vector<Vec2>& line, double offset) {
  std::vector<Vec2> out;
  out.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (i == 0) {
      out.push_back(line[0] + offset * left_normal(unit(line[1] - line[0])));
    } else if (i + 1 == line.size()) {
      out.push_back(line[i] + offset * left_normal(unit(line[i] - line[i - 1])));
    } else {
      const Vec2 n_prev = left_normal(unit(line[i] - line[i - 1]));
      const Vec2 n_next = left_normal(unit(line[i + 1] - line[i]));
      const Vec2 miter = unit(n_prev + n_next);
      out.push_back(line[i] + (offset / dot(miter, n_prev)) * miter);
    }
  }
  return out;
}

void append_polyline(std::vector<Segment>& segs, const std::vector<Vec2>& pts) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) segs.push_back({pts[i], pts[i + 1]});
}

// Walls of a corridor following `centerline`, closed behind the first vertex.
std::vector<Segment> corridor_walls(const std::vector<Vec2>& centerline, double width) {
  const std::vector<Vec2> left = offset_polyline(centerline, width / 2);
  const std::vector<Vec2> right = offset_polyline(centerline, -width / 2);
  std::vector<Segment> segs;
  append_polyline(segs, left);
  append_polyline(segs, right);
  segs.push_back({right.front(), left.front()});
  return segs;
}

// Wall-mounted bumps that narrow the passage by at most `depth`.
void add_clutter(World& w, const std::vector<Vec2>& centerline, const CourseSpec& spec) {
  if (spec.clutter <= 0) return;
  const double width = spec.effective_width();
  const double depth = std::min(0.15, 0.5 * (width - 2.0 * spec.robot_radius) - 0.02);
  if (depth <= 0) return;
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_leg(0, centerline.size() - 2);
  std::uniform_real_distribution<double> pick_t(0.25, 0.75);
  std::bernoulli_distribution pick_side(0.5);
  for (int i = 0; i < spec.clutter; ++i) {
    const std::size_t leg = pick_leg(rng);
    const double t = pick_t(rng);
    const double side = pick_side(rng) ? 1.0 : -1.0;
    const Vec2 a = centerline[leg];
    const Vec2 b = centerline[leg + 1];
    const Vec2 dir = unit(b - a);
    const Vec2 n = side * left_normal(dir);
    const Vec2 mid = a + t * (b - a);
    const Vec2 wall = mid + (width / 2) * n;
    const Vec2 p0 = wall - (kBumpLength / 2) * dir;
    const Vec2 p1 = wall + (kBumpLength / 2) * dir;
    const Vec2 inward = -depth * n;
    w.segments.push_back({p0, p0 + inward});
    w.segments.push_back({p0 + inward, p1 + inward});
    w.segments.push_back({p1 + inward, p1});
  }
}

// Inserts evenly spaced points so that no two consecutive route points are
// further apart than `spacing`.
std::vector<Vec2> densify(const std::vector<Vec2>& path, double spacing) {
  std::vector<Vec2> out = {path.front()};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 a = path[i - 1];
    const Vec2 b = path[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(norm(b - a) / spacing - 1e-9)));
    for (int k = 1; k <= pieces; ++k) out.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
  }
  return out;
}

World corridor_course(const std::vector<Vec2>& centerline, const CourseSpec& spec) {
  const double width = spec.effective_width();
  World w;
  w.name = spec.code();
  w.corridor_width = width;
  w.segments = corridor_walls(centerline, width);
  const Vec2 first_dir = unit(centerline[1] - centerline[0]);
  w.start = {centerline[0] + kStartOffset * first_dir, std::atan2(first_dir.y, first_dir.x)};

  // The last leg always heads +x.
  const Vec2 end = centerline.back();
  w.finish = {{end.x - kFinishDepth, end.y - width / 2}, {end.x, end.y + width / 2}};
  std::vector<Vec2> path = {w.start.position};
  for (std::size_t i = 1; i + 1 < centerline.size(); ++i) path.push_back(centerline[i]);
  path.push_back(w.finish.center());
  w.route = densify(path, kRouteSpacing);
  add_clutter(w, centerline, spec);
  return w;
}

World training_course(const CourseSpec& spec) {
  const double width = spec.effective_width();
  const double length = 3.0 * spec.wall_length;
  const double block = 0.6;
  const double offset = block / 2;  // block center left of the start line
  const double top = offset + block / 2 + width;
  const double bottom = offset - block / 2 - width;
  const double bx = 0.5 * length;

  World w;
  w.name = spec.code();
  w.corridor_width = width;
  w.segments = {
      {{0, bottom}, {length, bottom}},
      {{0, top}, {length, top}},
      {{0, bottom}, {0, top}},
      {{bx - block / 2, offset - block / 2}, {bx + block / 2, offset - block / 2}},
      {{bx + block / 2, offset - block / 2}, {bx + block / 2, offset + block / 2}},
      {{bx + block / 2, offset + block / 2}, {bx - block / 2, offset + block / 2}},
      {{bx - block / 2, offset + block / 2}, {bx - block / 2, offset - block / 2}},
  };
  w.start = {{kStartOffset, 0.0}, 0.0};
  w.finish = {{length - kFinishDepth, bottom}, {length, top}};
  const double lane = offset - block / 2 - width / 2;
  w.route = densify({w.start.position,
                     {bx - block / 2 - 1.0, lane},
                     {bx + block / 2 + 1.0, lane},
                     w.finish.center()},
                    kRouteSpacing);
  std::vector<Vec2> axis = {{0, 0}, {length, 0}};
  add_clutter(w, axis, spec);
  return w;
}

}  // namespace

std::string_view to_string(CourseKind kind) {
  switch (kind) {
    case CourseKind::kTraining: return "training";
    case CourseKind::kSTurn: return "sturn";
    case CourseKind::kZigzag: return "zigzag";
  }
  return "unknown";
}

std::string_view to_string(CourseVariant variant) {
  return variant == CourseVariant::kWide ? "wide" : "narrow";
}

CourseKind parse_course_kind(std::string_view text) {
  if (text == "training") return CourseKind::kTraining;
  if (text == "sturn" || text == "s-turn" || text == "st") return CourseKind::kSTurn;
  if (text == "zigzag" || text == "zz") return CourseKind::kZigzag;
  throw ConfigError("unknown course kind '" + std::string(text) + "'", "kind");
}

CourseVariant parse_course_variant(std::string_view text) {
  if (text == "wide") return CourseVariant::kWide;
  if (text == "narrow") return CourseVariant::kNarrow;
  throw ConfigError("unknown course variant '" + std::string(text) + "'", "variant");
}

double CourseSpec::effective_width() const {
  if (corridor_width > 0) return corridor_width;
  return variant == CourseVariant::kWide ? kWideCorridor : kNarrowCorridor;
}

std::string CourseSpec::code() const {
  std::string c;
  switch (kind) {
    case CourseKind::kTraining: c = "TR"; break;
    case CourseKind::kSTurn: c = "ST"; break;
    case CourseKind::kZigzag: c = "ZZ"; break;
  }
  c += variant == CourseVariant::kWide ? 'W' : 'N';
  return c;
}

CourseSpec parse_course_code(std::string_view code) {
  CourseSpec spec;
  const auto bad = [&] {
    return ConfigError("unknown course code '" + std::string(code) + "'", "course");
  };
  if (code.size() != 3) throw bad();
  const std::string_view kind = code.substr(0, 2);
  if (kind == "TR") {
    spec.kind = CourseKind::kTraining;
  } else if (kind == "ST") {
    spec.kind = CourseKind::kSTurn;
  } else if (kind == "ZZ") {
    spec.kind = CourseKind::kZigzag;
  } else {
    throw bad();
  }
  if (code[2] == 'W') {
    spec.variant = CourseVariant::kWide;
  } else if (code[2] == 'N') {
    spec.variant = CourseVariant::kNarrow;
  } else {
    throw bad();
  }
  return spec;
}

void CourseSpec::validate() const {
  if (!(robot_radius > 0)) throw ConfigError("robot_radius must be > 0", "robot_radius");
  if (!(corridor_width >= 0)) throw ConfigError("corridor_width must be >= 0", "corridor_width");
  if (!(effective_width() > 2.0 * robot_radius)) {
    throw ConfigError("corridor_width must exceed the robot diameter", "corridor_width");
  }
  if (!(wall_length > effective_width() + 0.5)) {
    throw ConfigError("wall_length too short for the corridor width", "wall_length");
  }
  if (clutter < 0) throw ConfigError("clutter must be >= 0", "clutter");
}

World build_course(const CourseSpec& spec) {
  spec.validate();
  const double leg = spec.wall_length;
  switch (spec.kind) {
    case CourseKind::kTraining:
      return training_course(spec);
    case CourseKind::kSTurn: {
      // E, N, W, N, E: two opposing pairs of 90 degree turns.
      const std::vector<Vec2> c = {{0, 0},       {leg, 0},       {leg, leg},
                                   {0, leg},     {0, 2 * leg},   {leg + leg / 2, 2 * leg}};
      return corridor_course(c, spec);
    }
    case CourseKind::kZigzag: {
      const double d = leg / std::numbers::sqrt2;
      std::vector<Vec2> c = {{0, 0}, {leg / 2, 0}};
      for (int i = 0; i < 4; ++i) {
        const Vec2 last = c.back();
        c.push_back({last.x + d, last.y + (i % 2 == 0 ? d : -d)});
      }
      c.push_back({c.back().x + leg / 2, c.back().y});
      return corridor_course(c, spec);
    }
  }
  throw ConfigError("unknown course kind", "kind");
}

void SensorConfig::validate() const {
  if (!(max_range > 0)) throw ConfigError("max_range must be > 0", "max_range");
  if (!(angular_resolution > 0)) {
    throw ConfigError("angular_resolution must be > 0", "angular_resolution");
  }
  if (!(fov > 0 && fov <= 2.0 * std::numbers::pi + 1e-12)) {
    throw ConfigError("fov must be in (0, 2 pi]", "fov");
  }
  if (!(range_noise_std >= 0)) throw ConfigError("range_noise_std must be >= 0", "range_noise_std");
  if (!(dropout_prob >= 0 && dropout_prob <= 1)) {
    throw ConfigError("dropout_prob must be in [0, 1]", "dropout_prob");
  }
}

std::vector<double> sensor_bearings(const SensorConfig& cfg) {
  std::vector<double> out;
  const double full = 2.0 * std::numbers::pi;
  if (cfg.fov >= full - 1e-12) {
    const auto n = static_cast<std::size_t>(std::llround(full / cfg.angular_resolution));
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(wrap_angle(static_cast<double>(i) * cfg.angular_resolution));
    }
  } else {
    const auto half = static_cast<long long>(std::floor(cfg.fov / 2 / cfg.angular_resolution + 1e-9));
    for (long long i = -half; i <= half; ++i) {
      out.push_back(static_cast<double>(i) * cfg.angular_resolution);
    }
  }
  return out;
}

double raycast(const World& world, Vec2 origin, Vec2 direction) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : world.segments) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(direction, e);
    if (denom == 0.0) continue;  // parallel
    const Vec2 w = s.a - origin;
    const double t = cross(w, e) / denom;
    const double u = cross(w, direction) / denom;
    if (t >= 0.0 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  return best;
}

shared::ObstacleScan raycast_scan(const World& world, const Pose2& pose, const SensorConfig& cfg,
                                  std::uint64_t sequence, double timestamp) {
  shared::ObstacleScan scan;
  scan.timestamp = timestamp;
  const bool noisy = cfg.range_noise_std > 0.0 || cfg.dropout_prob > 0.0;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(sequence),
                    static_cast<std::uint32_t>(sequence >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, cfg.range_noise_std > 0 ? cfg.range_noise_std : 1.0);
  std::bernoulli_distribution drop(cfg.dropout_prob);

  for (double bearing : sensor_bearings(cfg)) {
    const double heading = pose.yaw + bearing;
    const double range = raycast(world, pose.position, {std::cos(heading), std::sin(heading)});
    if (!(range <= cfg.max_range)) continue;
    double measured = range;
    if (noisy) {
      if (cfg.dropout_prob > 0.0 && drop(rng)) continue;
      if (cfg.range_noise_std > 0.0) measured += noise(rng);
    }
    if (!(measured > 0.0)) measured = 1e-6;
    scan.points.push_back({measured, bearing});
  }
  return scan;
}

Vec2 closest_point(const Segment& s, Vec2 p) {
  const Vec2 e = s.b - s.a;
  const double len2 = dot(e, e);
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, e) / len2, 0.0, 1.0);
  return s.a + t * e;
}

double distance_to_segment(const Segment& s, Vec2 p) { return norm(p - closest_point(s, p)); }

ContactReport check_collision(const World& world, Vec2 position, Vec2 velocity,
                              double robot_radius) {
  if (!(robot_radius > 0)) throw DomainError("check_collision: robot_radius must be > 0");
  ContactReport report;
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_point;
  for (const Segment& s : world.segments) {
    const Vec2 c = closest_point(s, position);
    const double d = norm(position - c);
    if (d < best) {
      best = d;
      best_point = c;
    }
  }
  if (best < robot_radius) {
    report.in_contact = true;
    report.penetration = robot_radius - best;
    report.contact_speed = norm(velocity);
    report.contact_point = best_point;
    report.normal = best > 0 ? (1.0 / best) * (position - best_point) : Vec2{1.0, 0.0};
  }
  return report;
}

double min_clearance(const World& world, Vec2 position, double robot_radius) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : world.segments) {
    best = std::min(best, distance_to_segment(s, position) - robot_radius);
  }
  return best;
}

std::string segments_to_text(const World& world) {
  std::string out;
  char line[160];
  for (const Segment& s : world.segments) {
    std::snprintf(line, sizeof line, "%.9g %.9g %.9g %.9g\n", s.a.x, s.a.y, s.b.x, s.b.y);
    out += line;
  }
  return out;
}

std::string world_to_json(const World& world) {
  nlohmann::ordered_json j;
  j["name"] = world.name;
  j["corridor_width"] = world.corridor_width;
  auto& segs = j["segments"] = nlohmann::ordered_json::array();
  for (const Segment& s : world.segments) segs.push_back({s.a.x, s.a.y, s.b.x, s.b.y});
  j["start"] = {{"x", world.start.position.x}, {"y", world.start.position.y}, {"yaw", world.start.yaw}};
  j["finish"] = {{"min", {world.finish.min.x, world.finish.min.y}},
                 {"max", {world.finish.max.x, world.finish.max.y}}};
  auto& route = j["route"] = nlohmann::ordered_json::array();
  for (const Vec2& p : world.route) route.push_back({p.x, p.y});
  return j.dump(2) + "\n";
}

}  // namespace papf::world
