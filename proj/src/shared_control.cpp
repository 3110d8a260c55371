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

#include "papf/shared_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "papf/error.hpp"

namespace papf::shared {
namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

bool in_semicircle(const ScanPoint& p, const NormalizedCommand& v_usr) {
  return std::cos(p.bearing) * v_usr.x + std::sin(p.bearing) * v_usr.y >= 0.0;
}

bool in_corridor(const ScanPoint& p, double half_width) {
  return std::abs(p.range * std::sin(p.bearing)) <= half_width;
}

double gated_zeta(double ideal, double fb, double zeta, GateMode mode) {
  switch (mode) {
    case GateMode::kDecelerateOnly:
      return (ideal - fb) * fb < 0.0 ? zeta : 0.0;
    case GateMode::kLiteral:
      return fb > ideal ? 0.0 : zeta;
  }
  return 0.0;
}

double compensate_axis(double ideal, double fb, double zeta, GateMode mode) {
  const double comp = ideal + gated_zeta(ideal, fb, zeta, mode) * (ideal - fb);
  if (mode == GateMode::kDecelerateOnly) {
    const double bound = std::max(std::abs(ideal), std::abs(fb));
    return std::clamp(comp, -bound, bound);
  }
  return clamp_unit(comp);
}

}  // namespace

NormalizedCommand NormalizedCommand::clamped(double x, double y) {
  return {clamp_unit(x), clamp_unit(y)};
}

double NormalizedCommand::magnitude() const { return std::min(1.0, std::hypot(x, y)); }

void PapfConfig::validate() const {
  if (!(delta_thre > 0.0)) throw ConfigError("delta_thre must be > 0", "delta_thre");
  if (!(eta_x >= 0.0)) throw ConfigError("eta_x must be >= 0", "eta_x");
  if (!(eta_y >= 0.0)) throw ConfigError("eta_y must be >= 0", "eta_y");
  if (!(zeta >= 0.0)) throw ConfigError("zeta must be >= 0", "zeta");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in [0, 1)", "epsilon");
  if (!(corridor_half_width > 0.0)) {
    throw ConfigError("corridor_half_width must be > 0", "corridor_half_width");
  }
  if (!(v_max > 0.0)) throw ConfigError("v_max must be > 0", "v_max");
  if (!(alarm_full_dist >= 0.0 && alarm_full_dist < alarm_on_dist)) {
    throw ConfigError("alarm_full_dist must be in [0, alarm_on_dist)", "alarm_full_dist");
  }
}

double firas_magnitude(double delta, double delta_thre, double eta) {
  if (!(delta > 0.0)) throw DomainError("firas_magnitude: delta must be > 0");
  if (!(delta_thre > 0.0)) throw DomainError("firas_magnitude: delta_thre must be > 0");
  if (!(eta >= 0.0)) throw DomainError("firas_magnitude: eta must be >= 0");
  if (delta > delta_thre) return 0.0;
  const double d = 1.0 / delta - 1.0 / delta_thre;
  return eta * d * d;
}

PointSelection select_points(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                             const PapfConfig& cfg) {
  PointSelection sel;
  if (v_usr.is_zero()) return sel;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const ScanPoint& p = scan.points[i];
    if (!in_semicircle(p, v_usr)) continue;
    sel.y_axis.push_back(i);
    if (in_corridor(p, cfg.corridor_half_width)) sel.x_axis.push_back(i);
  }
  return sel;
}

RepulsiveForce raw_repulsive_force(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                                   const PapfConfig& cfg) {
  const PointSelection sel = select_points(scan, v_usr, cfg);
  RepulsiveForce f;
  if (!sel.x_axis.empty()) {
    double sum = 0.0;
    for (std::size_t i : sel.x_axis) {
      const ScanPoint& p = scan.points[i];
      sum += std::cos(p.bearing) * firas_magnitude(p.range, cfg.delta_thre, cfg.eta_x);
    }
    f.fx = -sum / static_cast<double>(sel.x_axis.size());
  }
  if (!sel.y_axis.empty()) {
    double sum = 0.0;
    for (std::size_t i : sel.y_axis) {
      const ScanPoint& p = scan.points[i];
      sum += std::sin(p.bearing) * firas_magnitude(p.range, cfg.delta_thre, cfg.eta_y);
    }
    f.fy = -sum / static_cast<double>(sel.y_axis.size());
  }
  return f;
}

RepulsiveForce saturate(const RepulsiveForce& f) { return {clamp_unit(f.fx), clamp_unit(f.fy)}; }

RepulsiveForce repulsive_force(const ObstacleScan& scan, const NormalizedCommand& v_usr,
                               const PapfConfig& cfg) {
  return saturate(raw_repulsive_force(scan, v_usr, cfg));
}

NormalizedCommand blend(const NormalizedCommand& v_usr, const RepulsiveForce& f) {
  const double scale = v_usr.magnitude();
  return NormalizedCommand::clamped(v_usr.x + f.fx * scale, v_usr.y + f.fy * scale);
}

NormalizedCommand track_compensate(const NormalizedCommand& v_ideal,
                                   const NormalizedCommand& v_fb, double zeta, GateMode mode) {
  if (!(zeta >= 0.0)) throw ConfigError("zeta must be >= 0", "zeta");
  return {compensate_axis(v_ideal.x, v_fb.x, zeta, mode),
          compensate_axis(v_ideal.y, v_fb.y, zeta, mode)};
}

NormalizedCommand low_pass(const NormalizedCommand& v_comp, const NormalizedCommand& v_old,
                           double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in [0, 1)", "epsilon");
  return {v_comp.x + epsilon * (v_old.x - v_comp.x), v_comp.y + epsilon * (v_old.y - v_comp.y)};
}

double alarm_level(const ObstacleScan& scan, const NormalizedCommand& v_fb,
                   const PapfConfig& cfg) {
  if (scan.points.empty()) return 0.0;
  const auto nearest = std::min_element(
      scan.points.begin(), scan.points.end(),
      [](const ScanPoint& a, const ScanPoint& b) { return a.range < b.range; });
  if (nearest->range >= cfg.alarm_on_dist) return 0.0;
  const double closing =
      v_fb.x * std::cos(nearest->bearing) + v_fb.y * std::sin(nearest->bearing);
  if (closing <= 0.0) return 0.0;
  const double level =
      (cfg.alarm_on_dist - nearest->range) / (cfg.alarm_on_dist - cfg.alarm_full_dist);
  return std::clamp(level, 0.0, 1.0);
}

SharedControlOutput shared_control_step(const NormalizedCommand& v_usr,
                                        const ObstacleScan& scan,
                                        const NormalizedCommand& v_fb,
                                        const NormalizedCommand& v_old,
                                        const PapfConfig& cfg) {
  SharedControlOutput out;
  SharedControlDiagnostics& diag = out.diagnostics;

  const PointSelection sel = select_points(scan, v_usr, cfg);
  diag.selected_point_count_x = sel.x_axis.size();
  diag.selected_point_count_y = sel.y_axis.size();
  diag.raw_force = raw_repulsive_force(scan, v_usr, cfg);
  diag.force = saturate(diag.raw_force);
  if (!scan.points.empty()) {
    double m = std::numeric_limits<double>::infinity();
    for (const ScanPoint& p : scan.points) m = std::min(m, p.range);
    diag.min_distance = m;
  }
  diag.alarm_level = alarm_level(scan, v_fb, cfg);

  diag.ideal = blend(v_usr, diag.force);
  const NormalizedCommand comp = track_compensate(diag.ideal, v_fb, cfg.zeta, cfg.gate_mode);
  diag.compensation = {comp.x - diag.ideal.x, comp.y - diag.ideal.y};
  out.command = low_pass(comp, v_old, cfg.epsilon);
  return out;
}

}  // namespace papf::shared
