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

#ifndef PAPF_SHARED_CONTROL_HPP_
#define PAPF_SHARED_CONTROL_HPP_

// Passive artificial potential field (PAPF) shared control.
//
// All functions here are pure. The pipeline per shared-control tick is
//
//   scan, v_usr ──► repulsive_force ──► blend ──► track_compensate ──► low_pass
//                                                      ▲                  ▲
//                                                    v_fb               v_old
//
// and operates in normalized command space: every velocity is divided by
// v_max, so each axis lives in [-1, 1]. The x axis is the robot front, the y
// axis its left side.

#include <cstddef>
#include <optional>
#include <vector>

namespace papf::shared {

// One range return in the robot frame. `bearing` is measured from the robot
// +x axis, counterclockwise positive, in (-pi, pi].
struct ScanPoint {
  double range = 0.0;
  double bearing = 0.0;
};

struct ObstacleScan {
  std::vector<ScanPoint> points;
  double timestamp = 0.0;
};

// Per-axis velocity command in [-1, 1]. Use `clamped` to build one from
// arbitrary values.
struct NormalizedCommand {
  double x = 0.0;
  double y = 0.0;

  static NormalizedCommand clamped(double x, double y);
  // Euclidean norm, clamped to 1.
  double magnitude() const;
  bool is_zero() const { return x == 0.0 && y == 0.0; }

  friend bool operator==(const NormalizedCommand&, const NormalizedCommand&) = default;
};

struct RepulsiveForce {
  double fx = 0.0;
  double fy = 0.0;

  friend bool operator==(const RepulsiveForce&, const RepulsiveForce&) = default;
};

// How the velocity-tracking gain is switched on and off.
enum class GateMode {
  // Gain active only when the correction opposes the current motion, so the
  // tracking loop can only decelerate.
  kDecelerateOnly,
  // Gain zeroed whenever v_fb > v_ideal (signed, per axis).
  kLiteral,
};

struct PapfConfig {
  double eta_x = 2.0;
  double eta_y = 0.5;
  double delta_thre = 1.5;           // m
  double zeta = 1.0;
  double epsilon = 0.8;
  double corridor_half_width = 0.35;  // m
  double v_max = 2.4;                 // m/s
  double alarm_on_dist = 1.0;         // m
  double alarm_full_dist = 0.25;      // m
  GateMode gate_mode = GateMode::kDecelerateOnly;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Indices into ObstacleScan::points selected for each axis.
struct PointSelection {
  std::vector<std::size_t> x_axis;
  std::vector<std::size_t> y_axis;
};

struct SharedControlDiagnostics {
  RepulsiveForce raw_force;  // before saturation
  RepulsiveForce force;      // saturated
  std::size_t selected_point_count_x = 0;
  std::size_t selected_point_count_y = 0;
  std::optional<double> min_distance;
  double alarm_level = 0.0;
  NormalizedCommand ideal;
  // v_comp - v_ideal per axis.
  NormalizedCommand compensation;
};

struct SharedControlOutput {
  NormalizedCommand command;
  SharedControlDiagnostics diagnostics;
};

// FIRAS repulsion magnitude: eta * (1/delta - 1/delta_thre)^2 inside the
// radius of influence, zero beyond it. Throws DomainError on non-positive
// distances or negative eta.
double firas_magnitude(double delta, double delta_thre, double eta);

// Semicircle filter plus frontal-corridor test. A point is a candidate iff
// the command is nonzero and the point lies in the closed half-plane of the
// command direction. Only candidates inside the robot corridor feed f_x; all
// candidates feed f_y.
PointSelection select_points(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                             const PapfConfig& cfg);

// Averaged per-axis repulsion before saturation. Points outside the radius of
// influence contribute zero but still count toward the average.
RepulsiveForce raw_repulsive_force(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                                   const PapfConfig& cfg);

RepulsiveForce saturate(const RepulsiveForce& f);

// raw_repulsive_force saturated componentwise to [-1, 1].
RepulsiveForce repulsive_force(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                               const PapfConfig& cfg);

// v_ideal = v_usr + f * |v_usr|, clamped per axis.
NormalizedCommand blend(const NormalizedCommand& v_usr, const RepulsiveForce& f);

// v_comp = v_ideal + zeta_eff * (v_ideal - v_fb) per axis. In
// kDecelerateOnly mode the result is additionally bounded by
// max(|v_ideal|, |v_fb|). Throws ConfigError when zeta < 0.
NormalizedCommand track_compensate(const NormalizedCommand& v_ideal,
                                   const NormalizedCommand& v_fb, double zeta,
                                   GateMode mode = GateMode::kDecelerateOnly);

// v_cmd = (1 - epsilon) * v_comp + epsilon * v_old. Throws ConfigError when
// epsilon is outside [0, 1).
NormalizedCommand low_pass(const NormalizedCommand& v_comp, const NormalizedCommand& v_old,
                           double epsilon);

// Proximity alarm in [0, 1]. Zero unless the robot is closing on the nearest
// scan point and that point is nearer than alarm_on_dist.
double alarm_level(const ObstacleScan& scan, const NormalizedCommand& v_fb,
                   const PapfConfig& cfg);

// Full pipeline for one shared-control tick.
SharedControlOutput shared_control_step(const NormalizedCommand& v_usr,
                                        const ObstacleScan& scan,
                                        const NormalizedCommand& v_fb,
                                        const NormalizedCommand& v_old,
                                        const PapfConfig& cfg);

}  // namespace papf::shared

#endif  // PAPF_SHARED_CONTROL_HPP_
