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
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "papf/error.hpp"
#include "papf/world.hpp"

namespace papf::world {
namespace {

constexpr double kPi = std::numbers::pi;

// ---- independent geometry helpers ----

double point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

bool segments_cross(const Segment& s, const Segment& t) {
  const auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
  const double d1 = orient(t.a, t.b, s.a), d2 = orient(t.a, t.b, s.b);
  const double d3 = orient(s.a, s.b, t.a), d4 = orient(s.a, s.b, t.b);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_segment(const Segment& s, const Segment& t) {
  if (segments_cross(s, t)) return 0.0;
  return std::min({point_segment(s.a, t.a, t.b), point_segment(s.b, t.a, t.b),
                   point_segment(t.a, s.a, s.b), point_segment(t.b, s.a, s.b)});
}

bool share_endpoint(const Segment& s, const Segment& t) {
  const auto same = [](Vec2 a, Vec2 b) { return norm(a - b) < 1e-9; };
  return same(s.a, t.a) || same(s.a, t.b) || same(s.b, t.a) || same(s.b, t.b);
}

// Smallest distance between two walls that do not meet at a joint.
double min_passage(const World& w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.segments.size(); ++i) {
    for (std::size_t j = i + 1; j < w.segments.size(); ++j) {
      if (share_endpoint(w.segments[i], w.segments[j])) continue;
      best = std::min(best, segment_segment(w.segments[i], w.segments[j]));
    }
  }
  return best;
}

double nearest_wall(const World& w, Vec2 p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : w.segments) d = std::min(d, point_segment(p, s.a, s.b));
  return d;
}

// Coarse grid flood fill over positions where a disk of `radius` is free.
bool reachable(const World& w, double radius, double cell) {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -1.0 * lo;
  for (const auto& s : w.segments) {
    for (Vec2 p : {s.a, s.b}) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
  }
  lo = lo - Vec2{1.0, 1.0};
  hi = hi + Vec2{1.0, 1.0};
  const int nx = static_cast<int>((hi.x - lo.x) / cell) + 1;
  const int ny = static_cast<int>((hi.y - lo.y) / cell) + 1;
  const auto center = [&](int i, int j) { return Vec2{lo.x + i * cell, lo.y + j * cell}; };
  std::vector<char> seen(static_cast<std::size_t>(nx) * ny, 0);
  const auto idx = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  int si = static_cast<int>(std::lround((w.start.position.x - lo.x) / cell));
  int sj = static_cast<int>(std::lround((w.start.position.y - lo.y) / cell));
  if (nearest_wall(w, center(si, sj)) <= radius) return false;
  std::deque<std::pair<int, int>> queue{{si, sj}};
  seen[idx(si, sj)] = 1;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    if (w.finish.contains(center(i, j))) return true;
    for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int a = i + di, b = j + dj;
      if (a < 0 || b < 0 || a >= nx || b >= ny || seen[idx(a, b)]) continue;
      seen[idx(a, b)] = 1;
      if (nearest_wall(w, center(a, b)) > radius) queue.emplace_back(a, b);
    }
  }
  return false;
}

CourseSpec spec(CourseKind kind, CourseVariant variant) {
  CourseSpec s;
  s.kind = kind;
  s.variant = variant;
  return s;
}

const std::vector<CourseSpec>& all_courses() {
  static const std::vector<CourseSpec> specs = [] {
    std::vector<CourseSpec> v;
    for (auto k : {CourseKind::kTraining, CourseKind::kSTurn, CourseKind::kZigzag}) {
      for (auto var : {CourseVariant::kWide, CourseVariant::kNarrow}) v.push_back(spec(k, var));
    }
    return v;
  }();
  return specs;
}

// ---- courses ----

TEST(Course, DeterministicGeometry) {
  for (const auto& s : all_courses()) {
    const World a = build_course(s), b = build_course(s);
    EXPECT_EQ(a.segments, b.segments) << s.code();
    EXPECT_EQ(segments_to_text(a), segments_to_text(b));
  }
}

TEST(Course, NarrowPassageIsExactlyOneMetre) {
  for (auto k : {CourseKind::kSTurn, CourseKind::kZigzag}) {
    const World w = build_course(spec(k, CourseVariant::kNarrow));
    EXPECT_NEAR(min_passage(w), 1.0, 1e-9) << w.name;
  }
}

TEST(Course, WidePassageIsOneAndAHalfMetres) {
  for (auto k : {CourseKind::kSTurn, CourseKind::kZigzag}) {
    const World w = build_course(spec(k, CourseVariant::kWide));
    EXPECT_NEAR(min_passage(w), 1.5, 1e-9) << w.name;
  }
}

TEST(Course, CustomWidthIsHonoured) {
  CourseSpec s = spec(CourseKind::kZigzag, CourseVariant::kNarrow);
  s.corridor_width = 1.2;
  EXPECT_NEAR(min_passage(build_course(s)), 1.2, 1e-9);
}

TEST(Course, CenterlineKeepsHalfWidthFromWalls) {
  for (const auto& s : all_courses()) {
    if (s.kind == CourseKind::kTraining) continue;
    const World w = build_course(s);
    ASSERT_GE(w.route.size(), 2u);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < w.route.size(); ++i) {
      for (int k = 0; k <= 20; ++k) {
        const Vec2 p = w.route[i] + (k / 20.0) * (w.route[i + 1] - w.route[i]);
        best = std::min(best, nearest_wall(w, p));
      }
    }
    EXPECT_NEAR(2.0 * best, s.effective_width(), 1e-9) << s.code();
  }
}

TEST(Course, STurnReversesHeadingTwice) {
  const World w = build_course(spec(CourseKind::kSTurn, CourseVariant::kNarrow));
  // Collapse the route into legs and count sign flips of the x heading.
  std::vector<Vec2> legs;
  for (std::size_t i = 0; i + 1 < w.route.size(); ++i) {
    Vec2 d = w.route[i + 1] - w.route[i];
    d = (1.0 / norm(d)) * d;
    if (legs.empty() || norm(d - legs.back()) > 1e-9) legs.push_back(d);
  }
  EXPECT_EQ(legs.size(), 5u);
  int reversals = 0;
  double last = 0.0;
  for (const Vec2& d : legs) {
    if (std::abs(d.x) < 1e-9) continue;
    if (last != 0.0 && (d.x > 0) != (last > 0)) ++reversals;
    last = d.x;
  }
  EXPECT_EQ(reversals, 2);
}

TEST(Course, ZigzagBendsAlternateByFortyFiveDegrees) {
  const World w = build_course(spec(CourseKind::kZigzag, CourseVariant::kWide));
  std::vector<double> headings;
  for (std::size_t i = 0; i + 1 < w.route.size(); ++i) {
    const Vec2 d = w.route[i + 1] - w.route[i];
    const double h = std::atan2(d.y, d.x);
    if (headings.empty() || std::abs(h - headings.back()) > 1e-9) headings.push_back(h);
  }
  ASSERT_EQ(headings.size(), 6u);
  for (std::size_t i = 1; i + 1 < headings.size(); ++i) {
    EXPECT_NEAR(std::abs(headings[i]), kPi / 4, 1e-9);
    if (i > 1) EXPECT_NE(headings[i] > 0, headings[i - 1] > 0);
  }
}

TEST(Course, EveryCourseIsSolvableForTheRobotDisk) {
  for (const auto& s : all_courses()) {
    const World w = build_course(s);
    EXPECT_TRUE(reachable(w, s.robot_radius, 0.025)) << s.code();
  }
}

TEST(Course, StartPoseIsCollisionFree) {
  for (const auto& s : all_courses()) {
    const World w = build_course(s);
    EXPECT_GT(nearest_wall(w, w.start.position), s.robot_radius) << s.code();
    EXPECT_LT(w.finish.min.x, w.finish.max.x);
    EXPECT_LT(w.finish.min.y, w.finish.max.y);
  }
}

TEST(Course, TooNarrowForTheRobotIsRejected) {
  CourseSpec s = spec(CourseKind::kSTurn, CourseVariant::kNarrow);
  s.corridor_width = 0.7;  // equals the robot diameter
  EXPECT_THROW(build_course(s), ConfigError);
  s.corridor_width = 0.69;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Course, CodesRoundTrip) {
  for (const auto& s : all_courses()) {
    const CourseSpec back = parse_course_code(s.code());
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.variant, s.variant);
  }
  EXPECT_EQ(spec(CourseKind::kSTurn, CourseVariant::kNarrow).code(), "STN");
  EXPECT_EQ(spec(CourseKind::kZigzag, CourseVariant::kWide).code(), "ZZW");
  EXPECT_THROW(parse_course_code("XXN"), ConfigError);
  EXPECT_THROW(parse_course_code(""), ConfigError);
}

TEST(Course, ClutterIsSeededAndStaysSolvable) {
  CourseSpec s = spec(CourseKind::kTraining, CourseVariant::kWide);
  s.clutter = 4;
  s.seed = 3;
  const World a = build_course(s), b = build_course(s);
  EXPECT_EQ(a.segments, b.segments);
  EXPECT_GT(a.segments.size(), build_course(spec(CourseKind::kTraining, CourseVariant::kWide)).segments.size());
  EXPECT_TRUE(reachable(a, s.robot_radius, 0.025));
}

TEST(Export, TextHasOneLinePerSegment) {
  const World w = build_course(spec(CourseKind::kSTurn, CourseVariant::kNarrow));
  const std::string text = segments_to_text(w);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')),
            w.segments.size());
  std::istringstream in(text);
  double x1, y1, x2, y2;
  in >> x1 >> y1 >> x2 >> y2;
  EXPECT_EQ((Segment{{x1, y1}, {x2, y2}}), w.segments.front());
}

TEST(Export, JsonCarriesGeometry) {
  const World w = build_course(spec(CourseKind::kZigzag, CourseVariant::kNarrow));
  const auto j = nlohmann::json::parse(world_to_json(w));
  EXPECT_EQ(j["name"], "ZZN");
  EXPECT_EQ(j["segments"].size(), w.segments.size());
  EXPECT_DOUBLE_EQ(j["corridor_width"].get<double>(), 1.0);
  EXPECT_EQ(j["route"].size(), w.route.size());
}

// ---- sensing ----

World single_wall(double x) {
  World w;
  w.name = "wall";
  w.segments.push_back({{x, -3.0}, {x, 3.0}});
  return w;
}

TEST(Raycast, EmptyWorldEmptyScan) {
  EXPECT_TRUE(raycast_scan(World{}, Pose2{}, SensorConfig{}).points.empty());
}

TEST(Raycast, WallStraightAhead) {
  const auto scan = raycast_scan(single_wall(2.0), Pose2{}, SensorConfig{});
  const auto it = std::find_if(scan.points.begin(), scan.points.end(),
                               [](const auto& p) { return std::abs(p.bearing) < 1e-12; });
  ASSERT_NE(it, scan.points.end());
  EXPECT_NEAR(it->range, 2.0, 1e-12);
}

TEST(Raycast, BearingsAreInTheRobotFrame) {
  // Robot facing +y; a wall at x = 2 is on its right.
  const auto scan = raycast_scan(single_wall(2.0), Pose2{{0, 0}, kPi / 2}, SensorConfig{});
  const auto near = std::min_element(scan.points.begin(), scan.points.end(),
                                     [](auto& a, auto& b) { return a.range < b.range; });
  EXPECT_NEAR(near->bearing, -kPi / 2, 1e-9);
  EXPECT_NEAR(near->range, 2.0, 1e-12);
}

TEST(Raycast, BeyondMaxRangeIsSilent) {
  SensorConfig cfg;
  cfg.max_range = 7.0;
  EXPECT_TRUE(raycast_scan(single_wall(7.5), Pose2{}, cfg).points.empty());
}

TEST(Raycast, EveryReturnLiesOnAWall) {
  std::mt19937_64 rng(51);
  for (const auto& s : all_courses()) {
    const World w = build_course(s);
    std::uniform_real_distribution<double> t(0.0, 1.0);
    for (int k = 0; k < 5; ++k) {
      // Random pose on the centerline, random heading.
      const std::size_t i = static_cast<std::size_t>(t(rng) * (w.route.size() - 1));
      const Vec2 p = w.route[i] + t(rng) * (w.route[std::min(i + 1, w.route.size() - 1)] - w.route[i]);
      const Pose2 pose{p, kPi * (2 * t(rng) - 1)};
      for (const auto& sp : raycast_scan(w, pose, SensorConfig{}).points) {
        const Vec2 hit = p + sp.range * Vec2{std::cos(pose.yaw + sp.bearing), std::sin(pose.yaw + sp.bearing)};
        ASSERT_LT(nearest_wall(w, hit), 1e-9) << s.code();
        ASSERT_GT(sp.range, 0.0);
        ASSERT_LE(sp.bearing, kPi);
        ASSERT_GT(sp.bearing, -kPi);
      }
    }
  }
}

TEST(Raycast, NoiseAndDropoutAreSeeded) {
  SensorConfig cfg;
  cfg.range_noise_std = 0.02;
  cfg.dropout_prob = 0.2;
  cfg.seed = 9;
  const World w = build_course(spec(CourseKind::kSTurn, CourseVariant::kWide));
  const auto a = raycast_scan(w, w.start, cfg, 4);
  const auto b = raycast_scan(w, w.start, cfg, 4);
  const auto c = raycast_scan(w, w.start, cfg, 5);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].range, b.points[i].range);
  const auto clean = raycast_scan(w, w.start, SensorConfig{});
  EXPECT_LT(a.points.size(), clean.points.size());
  bool differs = a.points.size() != c.points.size();
  for (std::size_t i = 0; !differs && i < a.points.size(); ++i) differs = a.points[i].range != c.points[i].range;
  EXPECT_TRUE(differs);
}

TEST(Raycast, SensorConfigValidation) {
  SensorConfig cfg;
  cfg.max_range = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SensorConfig{};
  cfg.angular_resolution = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SensorConfig{};
  cfg.dropout_prob = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// ---- contact ----

TEST(Contact, ClearOfTheWall) {
  const auto r = check_collision(single_wall(1.0), {0, 0}, {0.5, 0}, 0.35);
  EXPECT_FALSE(r.in_contact);
}

TEST(Contact, PenetrationArithmetic) {
  const auto r = check_collision(single_wall(0.3), {0, 0}, {0.3, 0.4}, 0.35);
  EXPECT_TRUE(r.in_contact);
  EXPECT_NEAR(r.penetration, 0.05, 1e-12);
  EXPECT_NEAR(r.contact_speed, 0.5, 1e-12);
  EXPECT_NEAR(r.contact_point.x, 0.3, 1e-12);
  EXPECT_NEAR(r.normal.x, -1.0, 1e-12);
}

TEST(Contact, TouchingExactlyIsNotContact) {
  EXPECT_FALSE(check_collision(single_wall(0.25), {0, 0}, {}, 0.25).in_contact);
}

TEST(Contact, ClearanceArithmetic) {
  EXPECT_TRUE(std::isinf(min_clearance(World{}, {0, 0}, 0.35)));
  EXPECT_NEAR(min_clearance(single_wall(1.35), {0, 0}, 0.35), 1.0, 1e-12);
  EXPECT_LT(min_clearance(single_wall(0.2), {0, 0}, 0.35), 0.0);
}

TEST(Contact, AgreesWithTheScan) {
  std::mt19937_64 rng(61);
  const World w = build_course(spec(CourseKind::kZigzag, CourseVariant::kNarrow));
  std::uniform_real_distribution<double> x(0.0, 15.0), y(-1.0, 4.0);
  int contacts = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p{x(rng), y(rng)};
    const auto r = check_collision(w, p, {}, 0.35);
    if (!r.in_contact) continue;
    ++contacts;
    const auto scan = raycast_scan(w, Pose2{p, 0.0}, SensorConfig{});
    double m = std::numeric_limits<double>::infinity();
    for (const auto& sp : scan.points) m = std::min(m, sp.range);
    EXPECT_LT(m, 0.35) << "at " << p.x << "," << p.y;
    EXPECT_NEAR(r.penetration, 0.35 - nearest_wall(w, p), 1e-12);
  }
  EXPECT_GT(contacts, 100);
}

}  // namespace
}  // namespace papf::world
