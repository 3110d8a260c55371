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

#ifndef PAPF_WORLD_HPP_
#define PAPF_WORLD_HPP_

// Static 2D worlds made of line segments, the test-course builders, a
// planar range sensor and disk-robot contact checks.

#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "papf/geometry.hpp"
#include "papf/shared_control.hpp"

namespace papf::world {

struct Segment {
  Vec2 a;
  Vec2 b;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Rect {
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  Vec2 center() const { return 0.5 * (min + max); }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct World {
  std::string name;
  std::vector<Segment> segments;
  Pose2 start;
  Rect finish;
  // Corridor centerline from the start pose to the finish, usable as a rider
  // route. Empty for hand-built worlds.
  std::vector<Vec2> route;
  // Nominal corridor width; 0 for hand-built worlds.
  double corridor_width = 0.0;
};

enum class CourseKind { kTraining, kSTurn, kZigzag };
enum class CourseVariant { kWide, kNarrow };

std::string_view to_string(CourseKind kind);
std::string_view to_string(CourseVariant variant);
// Accepts "training", "sturn"/"s-turn", "zigzag". Throws ConfigError.
CourseKind parse_course_kind(std::string_view text);
CourseVariant parse_course_variant(std::string_view text);

inline constexpr double kWideCorridor = 1.5;    // m
inline constexpr double kNarrowCorridor = 1.0;  // m
inline constexpr double kDefaultRobotRadius = 0.35;

struct CourseSpec {
  CourseKind kind = CourseKind::kSTurn;
  CourseVariant variant = CourseVariant::kWide;
  // Passage width; 0 selects the variant default.
  double corridor_width = 0.0;
  double wall_length = 4.0;  // m, length of one corridor leg
  std::uint64_t seed = 0;
  // Number of wall-mounted bumps scattered along the course.
  int clutter = 0;
  double robot_radius = kDefaultRobotRadius;

  double effective_width() const;
  // Short course code, e.g. "STN".
  std::string code() const;
  void validate() const;
};

// Inverse of CourseSpec::code for the three-letter codes ("TRW", "STN", ...).
// Throws ConfigError on anything else.
CourseSpec parse_course_code(std::string_view code);

// Deterministic course geometry. S-Turn: five legs heading E, N, W, N, E.
// Zigzag: lead-in, four legs alternating +45 and -45 degrees, lead-out.
// Training: straight wide hall with one block offset from the start line.
World build_course(const CourseSpec& spec);

struct SensorConfig {
  double max_range = 7.0;
  double angular_resolution = std::numbers::pi / 180.0;
  double fov = 2.0 * std::numbers::pi;
  double range_noise_std = 0.0;
  double dropout_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Bearings (robot frame) cast by the sensor, in (-pi, pi].
std::vector<double> sensor_bearings(const SensorConfig& cfg);

// Distance along the ray from `origin` in `direction` (unit) to the nearest
// segment, or +inf when nothing is hit.
double raycast(const World& world, Vec2 origin, Vec2 direction);

// One scan from `pose`. Noise and dropouts are drawn from a generator seeded
// by (cfg.seed, sequence), so a scan is a pure function of its arguments.
shared::ObstacleScan raycast_scan(const World& world, const Pose2& pose, const SensorConfig& cfg,
                                  std::uint64_t sequence = 0, double timestamp = 0.0);

struct ContactReport {
  bool in_contact = false;
  double penetration = 0.0;
  double contact_speed = 0.0;
  Vec2 contact_point;
  // Unit vector from the contact point toward the robot center.
  Vec2 normal;
};

Vec2 closest_point(const Segment& s, Vec2 p);
double distance_to_segment(const Segment& s, Vec2 p);

ContactReport check_collision(const World& world, Vec2 position, Vec2 velocity,
                              double robot_radius);

// min over segments of (distance - radius); +inf for an empty world.
double min_clearance(const World& world, Vec2 position, double robot_radius);

// Plain-text export: one "x1 y1 x2 y2" line per segment.
std::string segments_to_text(const World& world);
std::string world_to_json(const World& world);

}  // namespace papf::world

#endif  // PAPF_WORLD_HPP_
