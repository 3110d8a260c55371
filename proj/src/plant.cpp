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

#include "papf/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "papf/error.hpp"

namespace papf::plant {
namespace {

constexpr int kMaxRiccatiIterations = 10000;
constexpr double kRiccatiTolerance = 1e-10;

struct AxisDerivative {
  double p_dot, v_dot, theta_dot, theta_ddot;
};

// Nonlinear equations of motion for one axis:
//   [m_tot        M l cos(th)] [p'' ]   [M l sin(th) th'^2 + Fp]
//   [M l cos(th)  M l^2 + I  ] [th'']  = [M g l sin(th) + Fth    ]
AxisDerivative axis_dynamics(const AxisState& s, double torque, double rider_torque,
                             const PlantParams& prm) {
  const double r = prm.ball_radius;
  const double m = prm.pendulum_mass();
  const double l = prm.com_height;
  const double m_tot = prm.ball_mass + prm.ball_inertia() / (r * r) + m;
  const double j = m * l * l + prm.body_inertia;
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);

  const double relative_rate = s.v / r - s.theta_dot;
  const double friction = -prm.viscous_friction * relative_rate;
  const double f_p = (torque + friction) / r + m * l * sn * s.theta_dot * s.theta_dot;
  const double f_th = m * prm.gravity * l * sn - (torque + friction) + rider_torque;

  const double m12 = m * l * c;
  const double det = m_tot * j - m12 * m12;
  return {s.v, (j * f_p - m12 * f_th) / det, s.theta_dot, (m_tot * f_th - m12 * f_p) / det};
}

AxisState axis_offset(const AxisState& s, const AxisDerivative& d, double h) {
  AxisState out = s;
  out.p += h * d.p_dot;
  out.v += h * d.v_dot;
  out.theta += h * d.theta_dot;
  out.theta_dot += h * d.theta_ddot;
  return out;
}

AxisState rk4_axis(const AxisState& s, double torque, double rider_torque,
                   const PlantParams& prm, double dt) {
  const AxisDerivative k1 = axis_dynamics(s, torque, rider_torque, prm);
  const AxisDerivative k2 = axis_dynamics(axis_offset(s, k1, dt / 2), torque, rider_torque, prm);
  const AxisDerivative k3 = axis_dynamics(axis_offset(s, k2, dt / 2), torque, rider_torque, prm);
  const AxisDerivative k4 = axis_dynamics(axis_offset(s, k3, dt), torque, rider_torque, prm);
  AxisState out = s;
  out.p += dt / 6 * (k1.p_dot + 2 * k2.p_dot + 2 * k3.p_dot + k4.p_dot);
  out.v += dt / 6 * (k1.v_dot + 2 * k2.v_dot + 2 * k3.v_dot + k4.v_dot);
  out.theta += dt / 6 * (k1.theta_dot + 2 * k2.theta_dot + 2 * k3.theta_dot + k4.theta_dot);
  out.theta_dot +=
      dt / 6 * (k1.theta_ddot + 2 * k2.theta_ddot + 2 * k3.theta_ddot + k4.theta_ddot);
  return out;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

void PlantParams::validate() const {
  if (!(ball_radius > 0)) throw ConfigError("ball_radius must be > 0", "ball_radius");
  if (!(ball_mass > 0)) throw ConfigError("ball_mass must be > 0", "ball_mass");
  if (!(body_mass > 0)) throw ConfigError("body_mass must be > 0", "body_mass");
  if (!(rider_mass >= 0)) throw ConfigError("rider_mass must be >= 0", "rider_mass");
  if (!(com_height > 0)) throw ConfigError("com_height must be > 0", "com_height");
  if (!(body_inertia > 0)) throw ConfigError("body_inertia must be > 0", "body_inertia");
  if (!(gravity >= 0)) throw ConfigError("gravity must be >= 0", "gravity");
  if (!(viscous_friction >= 0)) {
    throw ConfigError("viscous_friction must be >= 0", "viscous_friction");
  }
  if (!(v_max > 0)) throw ConfigError("v_max must be > 0", "v_max");
  if (!(yaw_time_constant > 0)) {
    throw ConfigError("yaw_time_constant must be > 0", "yaw_time_constant");
  }
}

LinearModel linearize(const PlantParams& prm) {
  prm.validate();
  const double r = prm.ball_radius;
  const double m = prm.pendulum_mass();
  const double l = prm.com_height;
  const double b = prm.viscous_friction;
  const double m_tot = prm.ball_mass + prm.ball_inertia() / (r * r) + m;
  const double j = m * l * l + prm.body_inertia;

  Eigen::Matrix2d mass;
  mass << m_tot, m * l, m * l, j;
  if (!(mass.determinant() > 1e-12 * m_tot * j)) {
    throw ConfigError("plant mass matrix is singular", "body_inertia");
  }
  const Eigen::Matrix2d inv = mass.inverse();

  // Generalized forces linearized in (v, theta, theta_dot, torque).
  Eigen::Matrix<double, 2, 4> forces;
  forces << -b / (r * r), 0.0, b / r, 1.0 / r,  //
      b / r, m * prm.gravity * l, -b, -1.0;
  const Eigen::Matrix<double, 2, 4> acc = inv * forces;

  LinearModel lm;
  lm.A.setZero();
  lm.A(0, 1) = 1.0;
  lm.A(2, 3) = 1.0;
  for (int row = 0; row < 2; ++row) {
    lm.A(2 * row + 1, 1) = acc(row, 0);
    lm.A(2 * row + 1, 2) = acc(row, 1);
    lm.A(2 * row + 1, 3) = acc(row, 2);
  }
  lm.B << 0.0, acc(0, 3), 0.0, acc(1, 3);
  return lm;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize(const Eigen::MatrixXd& A,
                                                       const Eigen::MatrixXd& B, double dt,
                                                       Discretization discretization) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (discretization == Discretization::kEuler) {
    return {Eigen::MatrixXd::Identity(n, n) + dt * A, dt * B};
  }
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = A * dt;
  block.topRightCorner(n, m) = B * dt;
  const Eigen::MatrixXd e = block.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

LqrResult solve_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                    double R, double dt, Discretization discretization) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != 1 || Q.rows() != A.rows() ||
      Q.cols() != A.cols()) {
    throw DomainError("solve_lqr: dimension mismatch");
  }
  if (!(R > 0)) throw DomainError("solve_lqr: R must be > 0");
  if (!(dt > 0)) throw DomainError("solve_lqr: dt must be > 0");

  const auto [ad, bd] = discretize(A, B, dt, discretization);
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  // Structure-preserving doubling: H_k converges quadratically to the
  // stabilizing DARE solution, A_k -> 0, G_k to the dual solution.
  Eigen::MatrixXd a_k = ad;
  Eigen::MatrixXd g_k = bd * bd.transpose() / R;
  Eigen::MatrixXd p = Q;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < kMaxRiccatiIterations; ++it) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(eye + g_k * p);
    const Eigen::MatrixXd w_a = lu.solve(a_k);
    const Eigen::MatrixXd w_g = lu.solve(g_k);
    Eigen::MatrixXd next = p + a_k.transpose() * p * w_a;
    next = 0.5 * (next + next.transpose());
    g_k = g_k + a_k * w_g * a_k.transpose();
    g_k = 0.5 * (g_k + g_k.transpose());
    a_k = a_k * w_a;
    residual = (next - p).cwiseAbs().rowwise().sum().maxCoeff();
    p = std::move(next);
    if (!std::isfinite(residual)) break;
    if (residual < kRiccatiTolerance) break;
  }
  if (!(residual < kRiccatiTolerance)) {
    std::ostringstream os;
    os << "Riccati iteration did not converge after " << it << " iterations (residual "
       << residual << ")";
    throw SynthesisError(os.str(), it, residual);
  }

  LqrResult res;
  const double s = R + (bd.transpose() * p * bd)(0, 0);
  res.K = (bd.transpose() * p * ad) / s;
  res.P = p;
  res.iterations = it + 1;
  res.spectral_radius = spectral_radius(ad - bd * res.K);
  return res;
}

std::pair<Eigen::Matrix4d, Eigen::Vector4d> balance_loop_system(const LinearModel& model) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  Eigen::Vector4d b = Eigen::Vector4d::Zero();
  // Drop p (nothing depends on it) and append the velocity integrator.
  a.topLeftCorner<3, 3>() = model.A.bottomRightCorner<3, 3>();
  a(3, 0) = 1.0;
  b.head<3>() = model.B.tail<3>();
  return {a, b};
}

ControllerGains synthesize_gains(const PlantParams& params, const LqrWeights& weights, double dt) {
  const LinearModel model = linearize(params);
  const auto [a, b] = balance_loop_system(model);
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) q(i, i) = weights.q[static_cast<std::size_t>(i)];
  const LqrResult lqr = solve_lqr(a, b, q, weights.r, dt, weights.discretization);

  ControllerGains g;
  for (int i = 0; i < 4; ++i) g.lqr_k[static_cast<std::size_t>(i)] = lqr.K(i);
  // u = -k_v (v - v_ref) - k_th th - k_thd th' - k_z z, z = -integral, folds
  // into u = -k_th (th - th_ref) - k_thd th' with
  //   th_ref = (k_v / k_th) e + (k_z / k_th) integral,   e = v_ref - v.
  const double k_theta = g.lqr_k[1];
  if (std::abs(k_theta) < 1e-12) {
    throw SynthesisError("balance gain on lean angle vanished", lqr.iterations, 0.0);
  }
  g.pi_kp = g.lqr_k[0] / k_theta;
  g.pi_ki = g.lqr_k[3] / k_theta;
  g.spectral_radius = lqr.spectral_radius;
  g.synthesis_dt = dt;
  return g;
}

double axis_control(AxisState& axis, double v_target, const ControllerGains& gains,
                    const PlantParams& params, double dt) {
  // Reference model: v_ref'' = w^2 (v_target - v_ref) - 2 w v_ref', with the
  // acceleration bounded. Semi-implicit Euler at the control rate.
  const double w = gains.reference_bandwidth;
  const double jerk = std::clamp(w * w * (v_target - axis.v_ref) - 2.0 * w * axis.a_ref,
                                -gains.jerk_limit, gains.jerk_limit);
  axis.a_ref = std::clamp(axis.a_ref + jerk * dt, -gains.accel_limit, gains.accel_limit);
  axis.v_ref += axis.a_ref * dt;

  // Lean and torque that sustain a_ref on the linearized plant.
  const double r = params.ball_radius;
  const double m = params.pendulum_mass();
  const double l = params.com_height;
  const double m_tot = params.ball_mass + params.ball_inertia() / (r * r) + m;
  const double lean_ff =
      params.gravity > 0 ? axis.a_ref * (m * l + r * m_tot) / (m * params.gravity * l) : 0.0;
  const double torque_ff = r * m_tot * axis.a_ref;

  const double error = axis.v_ref - axis.v;
  double integral = axis.integral + error * dt;
  if (gains.pi_ki != 0.0) {
    const double bound = gains.integrator_limit / std::abs(gains.pi_ki);
    integral = std::clamp(integral, -bound, bound);
  }
  axis.integral = integral;
  const double lean_ref = std::clamp(lean_ff + gains.pi_kp * error + gains.pi_ki * integral,
                                     -gains.lean_ref_limit, gains.lean_ref_limit);
  return torque_ff - gains.lqr_k[1] * (axis.theta - lean_ref) - gains.lqr_k[2] * axis.theta_dot;
}

PlantState integrate_rk4(const PlantState& state, Vec2 motor_torque, Vec2 rider_torque,
                         double yaw_rate_cmd, const PlantParams& params, double dt) {
  PlantState next = state;
  next.x_axis = rk4_axis(state.x_axis, motor_torque.x, rider_torque.x, params, dt);
  next.y_axis = rk4_axis(state.y_axis, motor_torque.y, rider_torque.y, params, dt);
  // Exact solution of the first-order yaw lag over dt.
  const double decay = std::exp(-dt / params.yaw_time_constant);
  const double tau = params.yaw_time_constant;
  next.yaw_rate = yaw_rate_cmd + (state.yaw_rate - yaw_rate_cmd) * decay;
  next.yaw = wrap_angle(state.yaw + yaw_rate_cmd * dt +
                        (state.yaw_rate - yaw_rate_cmd) * tau * (1.0 - decay));
  next.time = state.time + dt;
  return next;
}

Vec2 control_torques(PlantState& state, const NormalizedCommand& v_cmd, const ControllerGains& gains,
                     const PlantParams& params, double dt) {
  const Vec2 body_ref{std::clamp(v_cmd.x, -1.0, 1.0) * params.v_max,
                      std::clamp(v_cmd.y, -1.0, 1.0) * params.v_max};
  const Vec2 world_ref = rotate(body_ref, state.yaw);
  return {axis_control(state.x_axis, world_ref.x, gains, params, dt),
          axis_control(state.y_axis, world_ref.y, gains, params, dt)};
}

bool update_fallen(PlantState& state) {
  constexpr double kHalfPi = std::numbers::pi / 2;
  if (std::abs(state.x_axis.theta) >= kHalfPi || std::abs(state.y_axis.theta) >= kHalfPi) {
    state.fallen = true;
  }
  return state.fallen;
}

PlantState low_level_step(const PlantState& state, const NormalizedCommand& v_cmd,
                          double yaw_rate_cmd, const ControllerGains& gains,
                          const PlantParams& params, Vec2 rider_torque, double dt, int substeps) {
  if (state.fallen) return state;
  if (!(dt > 0)) throw DomainError("low_level_step: dt must be > 0");
  if (substeps < 1) throw DomainError("low_level_step: substeps must be >= 1");

  PlantState next = state;
  const Vec2 torque = control_torques(next, v_cmd, gains, params, dt);
  const Vec2 rider_world = rotate(rider_torque, state.yaw);
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    next = integrate_rk4(next, torque, rider_world, yaw_rate_cmd, params, h);
  }
  update_fallen(next);
  return next;
}

NormalizedCommand feedback_velocity(const PlantState& state, const PlantParams& params) {
  const Vec2 body = rotate(state.velocity(), -state.yaw);
  return NormalizedCommand::clamped(body.x / params.v_max, body.y / params.v_max);
}

double ball_mobility(const AxisState& s, const PlantParams& prm) {
  const double r = prm.ball_radius;
  const double m = prm.pendulum_mass();
  const double l = prm.com_height;
  const double m_tot = prm.ball_mass + prm.ball_inertia() / (r * r) + m;
  const double j = m * l * l + prm.body_inertia;
  const double m12 = m * l * std::cos(s.theta);
  return j / (m_tot * j - m12 * m12);
}

void apply_ball_impulse(AxisState& s, double impulse, const PlantParams& prm) {
  const double r = prm.ball_radius;
  const double m = prm.pendulum_mass();
  const double l = prm.com_height;
  const double m_tot = prm.ball_mass + prm.ball_inertia() / (r * r) + m;
  const double j = m * l * l + prm.body_inertia;
  const double m12 = m * l * std::cos(s.theta);
  const double det = m_tot * j - m12 * m12;
  s.v += j / det * impulse;
  s.theta_dot -= m12 / det * impulse;
}

double axis_energy(const AxisState& s, const PlantParams& prm) {
  const double r = prm.ball_radius;
  const double m = prm.pendulum_mass();
  const double l = prm.com_height;
  const double m_tot = prm.ball_mass + prm.ball_inertia() / (r * r) + m;
  const double j = m * l * l + prm.body_inertia;
  const double kinetic = 0.5 * m_tot * s.v * s.v + m * l * std::cos(s.theta) * s.v * s.theta_dot +
                         0.5 * j * s.theta_dot * s.theta_dot;
  return kinetic + m * prm.gravity * l * std::cos(s.theta);
}

std::string describe(const LinearModel& model) {
  std::ostringstream os;
  const Eigen::IOFormat fmt(6, 0, ", ", "\n", "[", "]");
  os << "A =\n" << model.A.format(fmt) << "\nB =\n" << model.B.transpose().format(fmt) << "\n";
  return os.str();
}

}  // namespace papf::plant
