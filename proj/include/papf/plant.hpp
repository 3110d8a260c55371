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

#ifndef PAPF_PLANT_HPP_
#define PAPF_PLANT_HPP_

// Planar ballbot model: a ball of radius r rolling without slip and a rigid
// body (robot + rider) pivoting about the ball center. The x and y channels
// are independent copies of this wheeled inverted pendulum, expressed in the
// world frame; yaw is a first-order lag on the commanded yaw rate.
//
// Per-axis coordinates are the ball position p and the absolute body lean
// theta (positive leans the body toward +p). The motor torque acts between
// ball and body; viscous friction acts on their relative rotation.

#include <array>
#include <string>

#include <Eigen/Dense>

#include "papf/geometry.hpp"
#include "papf/shared_control.hpp"

namespace papf::plant {

using shared::NormalizedCommand;

struct PlantParams {
  double ball_radius = 0.1;       // m
  double ball_mass = 3.0;         // kg
  double body_mass = 34.0;        // kg, robot body without the ball
  double rider_mass = 60.0;       // kg, lumped into the body
  double com_height = 0.6;        // m, ball center to body+rider COM
  double body_inertia = 10.0;     // kg m^2 about the COM
  double gravity = 9.81;          // m/s^2
  double viscous_friction = 0.5;  // N m s
  double v_max = 2.4;             // m/s
  double yaw_time_constant = 0.2; // s

  double pendulum_mass() const { return body_mass + rider_mass; }
  // Ball inertia as a solid sphere.
  double ball_inertia() const { return 0.4 * ball_mass * ball_radius * ball_radius; }
  void validate() const;
};

struct AxisState {
  double p = 0.0;          // ball position, m
  double v = 0.0;          // ball velocity, m/s
  double theta = 0.0;      // body lean, rad
  double theta_dot = 0.0;  // rad/s
  double integral = 0.0;   // velocity-loop integrator, m
  double v_ref = 0.0;      // shaped velocity reference, m/s
  double a_ref = 0.0;      // its derivative, m/s^2

  friend bool operator==(const AxisState&, const AxisState&) = default;
};

struct PlantState {
  AxisState x_axis;
  AxisState y_axis;
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double time = 0.0;
  bool fallen = false;

  Vec2 position() const { return {x_axis.p, y_axis.p}; }
  Vec2 velocity() const { return {x_axis.v, y_axis.v}; }
  Pose2 pose() const { return {position(), yaw}; }

  friend bool operator==(const PlantState&, const PlantState&) = default;
};

// Continuous-time per-axis linearization about upright, state [p, v, theta,
// theta_dot], input motor torque.
struct LinearModel {
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
};

enum class Discretization { kZeroOrderHold, kEuler };

struct LqrResult {
  Eigen::RowVectorXd K;
  Eigen::MatrixXd P;
  int iterations = 0;
  double spectral_radius = 0.0;  // of A_d - B_d K
};

// Cost weights for the balance loop, on [v - v_ref, theta, theta_dot,
// integral of velocity error].
struct LqrWeights {
  std::array<double, 4> q = {20.0, 5000.0, 10.0, 100.0};
  double r = 0.001;
  Discretization discretization = Discretization::kZeroOrderHold;
};

struct ControllerGains {
  // State feedback on [v - v_ref, theta, theta_dot, -integral].
  std::array<double, 4> lqr_k{};
  double pi_kp = 0.0;  // rad per m/s
  double pi_ki = 0.0;  // rad per m
  double integrator_limit = 0.3;  // rad of lean reference
  double lean_ref_limit = 0.35;   // rad
  double reference_bandwidth = 3.0;  // rad/s, critically damped reference model
  double accel_limit = 3.0;          // m/s^2, bound on the reference acceleration
  double jerk_limit = 6.0;           // m/s^3, bounds how fast the lean reference moves
  double spectral_radius = 0.0;
  double synthesis_dt = 0.0;
};

LinearModel linearize(const PlantParams& params);

// Infinite-horizon discrete LQR by Riccati iteration. A and B are
// continuous-time; they are discretized at `dt` first. Throws
// SynthesisError when the iteration does not converge within 10000 steps.
LqrResult solve_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                    double R, double dt,
                    Discretization discretization = Discretization::kZeroOrderHold);

// Discretized (A_d, B_d) pair.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize(const Eigen::MatrixXd& A,
                                                       const Eigen::MatrixXd& B, double dt,
                                                       Discretization discretization);

// Augmented balance-loop system [v, theta, theta_dot, z] with z' = v.
std::pair<Eigen::Matrix4d, Eigen::Vector4d> balance_loop_system(const LinearModel& model);

// Synthesizes the LQR-PI cascade for the control period `dt`.
ControllerGains synthesize_gains(const PlantParams& params, const LqrWeights& weights, double dt);

// Motor torque for one axis from the cascade. Advances the reference model
// and the integrator held in `axis`.
double axis_control(AxisState& axis, double v_target, const ControllerGains& gains,
                    const PlantParams& params, double dt);

// World-frame cascade torques for a robot-frame command. Advances the
// reference models and integrators held in `state`.
Vec2 control_torques(PlantState& state, const NormalizedCommand& v_cmd, const ControllerGains& gains,
                     const PlantParams& params, double dt);

// Sets `fallen` when either lean reaches pi/2. Returns the flag.
bool update_fallen(PlantState& state);

// One fixed RK4 step of the nonlinear model with constant torques (world
// frame). Does not check for falls.
PlantState integrate_rk4(const PlantState& state, Vec2 motor_torque, Vec2 rider_torque,
                         double yaw_rate_cmd, const PlantParams& params, double dt);

// One control period: the cascade computes torques from `v_cmd` (robot frame)
// and holds them over `substeps` RK4 steps of dt / substeps. `rider_torque`
// is in the robot frame. A state with |theta| >= pi/2 is flagged fallen and
// is returned unchanged by later calls.
PlantState low_level_step(const PlantState& state, const NormalizedCommand& v_cmd,
                          double yaw_rate_cmd, const ControllerGains& gains,
                          const PlantParams& params, Vec2 rider_torque, double dt,
                          int substeps = 1);

// Robot-frame velocity divided by v_max, clamped to [-1, 1].
NormalizedCommand feedback_velocity(const PlantState& state, const PlantParams& params);

// Velocity change of the ball per unit horizontal impulse at the ball
// center, (M^-1)_11 of the mass matrix at the current lean.
double ball_mobility(const AxisState& axis, const PlantParams& params);

// Applies a horizontal impulse (N s) at the ball center, updating ball
// velocity and lean rate consistently with the coupled mass matrix.
void apply_ball_impulse(AxisState& axis, double impulse, const PlantParams& params);

// Kinetic plus potential energy of one axis (zero potential at the pivot).
double axis_energy(const AxisState& axis, const PlantParams& params);

std::string describe(const LinearModel& model);

}  // namespace papf::plant

#endif  // PAPF_PLANT_HPP_
