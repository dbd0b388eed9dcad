// Point-mass quadrotor with a position-setpoint inner loop.
//
// The airframe is modelled as a double integrator whose velocity tracks
// kp_pos * (setpoint - position) with a first-order lag. Thrust is assumed to
// cancel gravity, so the only unmodelled acceleration is the external force.
// Roll and pitch are synthesized from the commanded lateral acceleration so
// that the observation vector carries attitude signals with the usual sign
// conventions; yaw is held at zero.
#pragma once

#include <cmath>

#include "lander/common.hpp"

namespace lander {

struct DroneState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();  // roll, pitch, yaw [rad]
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 setpoint = Vec3::Zero();

  bool finite() const {
    return position.allFinite() && velocity.allFinite() && attitude.allFinite() &&
           angular_velocity.allFinite() && setpoint.allFinite();
  }

  /// Drone at rest at `p`, commanded to hold `p`.
  static DroneState hovering_at(const Vec3& p) {
    DroneState s;
    s.position = p;
    s.setpoint = p;
    return s;
  }
};

struct DroneParams {
  double mass = 0.027;    // kg
  double kp_pos = 4.0;    // 1/s
  double tau_v = 0.25;    // s
  double a_max = 10.0;    // m/s^2
  double physics_dt = 1.0 / 240.0;
  double gravity = 9.81;

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("dynamics.mass must be > 0");
    if (!(tau_v > 0.0)) throw ConfigError("dynamics.tau_v must be > 0");
    if (!(physics_dt > 0.0)) throw ConfigError("dynamics.physics_dt must be > 0");
    if (!(a_max > 0.0)) throw ConfigError("dynamics.a_max must be > 0");
    if (!(gravity > 0.0)) throw ConfigError("dynamics.gravity must be > 0");
    if (!(kp_pos >= 0.0)) throw ConfigError("dynamics.kp_pos must be >= 0");
  }
};

/// Per-axis linear velocity envelope of the airframe [m/s].
inline const Vec3& velocity_envelope() {
  static const Vec3 env(3.0, 3.0, 2.0);
  return env;
}

/// Largest setpoint offset accepted from a controller in one control step [m].
inline constexpr double kMaxSetpointDelta = 0.1;

inline DroneState step_drone(const DroneState& state, const DroneParams& params,
                             const Vec3& external_force, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractError("step_drone: dt must be finite and > 0");
  if (!state.finite() || !external_force.allFinite())
    throw StateCorruptionError("step_drone: non-finite state or force");

  const Vec3 v_cmd = clamp_box(params.kp_pos * (state.setpoint - state.position), velocity_envelope());
  Vec3 a_cmd = (v_cmd - state.velocity) / params.tau_v;
  const double a_norm = a_cmd.norm();
  if (a_norm > params.a_max) a_cmd *= params.a_max / a_norm;
  const Vec3 accel = a_cmd + external_force / params.mass;

  DroneState next = state;
  next.velocity = clamp_box(state.velocity + accel * dt, velocity_envelope());
  next.position = state.position + next.velocity * dt;
  next.attitude = Vec3(std::atan2(-a_cmd.y(), params.gravity), std::atan2(a_cmd.x(), params.gravity), 0.0);
  next.angular_velocity = (next.attitude - state.attitude) / dt;

  if (!next.finite()) throw StateCorruptionError("step_drone: integration produced a non-finite state");
  return next;
}

/// Commands the inner loop to hold `position + delta`.
inline DroneState apply_setpoint_delta(const DroneState& state, const Vec3& delta) {
  if (!delta.allFinite()) throw StateCorruptionError("apply_setpoint_delta: non-finite delta");
  // Small slack for delta = scale * action rounding.
  if (delta.cwiseAbs().maxCoeff() > kMaxSetpointDelta + 1e-12)
    throw ContractError("apply_setpoint_delta: |delta|_inf exceeds 0.1 m (unscaled action?)");
  DroneState next = state;
  next.setpoint = state.position + delta;
  return next;
}

}  // namespace lander
