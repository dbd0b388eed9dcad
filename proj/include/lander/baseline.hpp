// EKF + PID pursuit baseline. The filter tracks the platform from noisy
// position fixes; a PID law steers toward the predicted pad position and emits
// setpoint deltas through the same bounded channel as the learned agent.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "lander/common.hpp"
#include "lander/dynamics.hpp"
#include "lander/ekf.hpp"

namespace lander {

struct BaselineConfig {
  Vec3 kp = Vec3(1.2, 1.2, 1.0);
  Vec3 ki = Vec3::Constant(0.05);
  Vec3 kd = Vec3::Constant(0.3);
  double integral_clamp = 0.5;
  double output_clamp = kMaxSetpointDelta;
  double lookahead = 0.5;         // s
  double descent_rate = 0.3;      // m/s
  double align_radius = 0.1;      // lateral error below which the approach offset ramps down [m]
  double measurement_sigma = 0.001;
  double process_noise = 1e-4;
  double measurement_noise = 1e-6;
  double initial_velocity_variance = 1.0;

  void validate() const {
    if (!(integral_clamp >= 0.0)) throw ConfigError("baseline.integral_clamp must be >= 0");
    if (!(output_clamp > 0.0 && output_clamp <= kMaxSetpointDelta))
      throw ConfigError("baseline.output_clamp must lie in (0, 0.1]");
    if (!(lookahead >= 0.0 && descent_rate > 0.0 && align_radius > 0.0))
      throw ConfigError("baseline: lookahead >= 0, descent_rate > 0 and align_radius > 0 required");
    if (!(measurement_sigma >= 0.0 && process_noise >= 0.0 && measurement_noise > 0.0 &&
          initial_velocity_variance > 0.0))
      throw ConfigError("baseline: noise parameters out of range");
  }
};

class PidController {
 public:
  PidController() = default;
  PidController(Vec3 kp, Vec3 ki, Vec3 kd, double integral_clamp, double output_clamp)
      : kp_(kp), ki_(ki), kd_(kd), integral_clamp_(integral_clamp), output_clamp_(output_clamp) {}

  Vec3 update(const Vec3& error, double dt) {
    integral_ = clamp_box(integral_ + error * dt, Vec3::Constant(integral_clamp_));
    const Vec3 derivative = previous_error_ ? Vec3((error - *previous_error_) / dt) : Vec3::Zero();
    previous_error_ = error;
    const Vec3 out = kp_.cwiseProduct(error) + ki_.cwiseProduct(integral_) + kd_.cwiseProduct(derivative);
    return clamp_box(out, Vec3::Constant(output_clamp_));
  }

  void reset() {
    integral_.setZero();
    previous_error_.reset();
  }

  const Vec3& integral() const { return integral_; }

 private:
  Vec3 kp_ = Vec3::Ones(), ki_ = Vec3::Zero(), kd_ = Vec3::Zero();
  double integral_clamp_ = 0.5;
  double output_clamp_ = kMaxSetpointDelta;
  Vec3 integral_ = Vec3::Zero();
  std::optional<Vec3> previous_error_;
};

/// Aim point: the pad extrapolated `lookahead` seconds ahead, raised by the
/// remaining approach offset.
inline Vec3 pursuit_target(const EkfState& est, double lookahead, double approach_offset) {
  Vec3 target = est.position() + est.velocity() * lookahead;
  target.z() += approach_offset;
  return target;
}

/// Setpoint delta steering the drone toward the pursuit target.
inline Vec3 pursuit_command(const EkfState& est, const DroneState& drone, double lookahead, double approach_offset,
                            PidController& pid, double dt) {
  return pid.update(pursuit_target(est, lookahead, approach_offset) - drone.position, dt);
}

/// Stateful per-episode baseline: measurement model, filter, approach ramp and PID.
class EkfPidPilot {
 public:
  explicit EkfPidPilot(BaselineConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  void reset(const DroneState& drone, const Vec3& pad_position, double dt, std::uint64_t seed) {
    dt_ = dt;
    noise_rng_ = make_rng(seed, "baseline-measurement");
    pid_ = PidController(cfg_.kp, cfg_.ki, cfg_.kd, cfg_.integral_clamp, cfg_.output_clamp);
    const Vec3 z = measure(pad_position);
    Vec6 x0 = Vec6::Zero();
    x0.head<3>() = z;
    Mat6 P0 = Mat6::Identity();
    P0.topLeftCorner<3, 3>() *= cfg_.measurement_noise;
    P0.bottomRightCorner<3, 3>() *= cfg_.initial_velocity_variance;
    ekf_ = make_ekf(x0, P0, dt, cfg_.process_noise, cfg_.measurement_noise);
    approach_offset_ = std::max(0.0, drone.position.z() - z.z());
    first_ = true;
  }

  /// Setpoint delta for this control step given the true pad position.
  Vec3 command(const DroneState& drone, const Vec3& pad_position) {
    const Vec3 z = measure(pad_position);
    if (!first_) ekf_ = ekf_predict(ekf_);
    ekf_ = ekf_update(ekf_, z);
    first_ = false;

    const Vec3 aim = pursuit_target(ekf_, cfg_.lookahead, 0.0);
    if ((aim - drone.position).head<2>().norm() < cfg_.align_radius)
      approach_offset_ = std::max(0.0, approach_offset_ - cfg_.descent_rate * dt_);
    return pursuit_command(ekf_, drone, cfg_.lookahead, approach_offset_, pid_, dt_);
  }

  const EkfState& estimate() const { return ekf_; }
  double approach_offset() const { return approach_offset_; }
  const BaselineConfig& config() const { return cfg_; }

 private:
  Vec3 measure(const Vec3& truth) {
    Vec3 z = truth;
    for (int i = 0; i < 3; ++i) z[i] += cfg_.measurement_sigma * standard_normal(noise_rng_);
    return z;
  }

  BaselineConfig cfg_;
  EkfState ekf_;
  PidController pid_;
  Rng noise_rng_;
  double dt_ = 1.0 / 30.0;
  double approach_offset_ = 0.0;
  bool first_ = true;
};

}  // namespace lander
