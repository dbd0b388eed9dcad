// Landing episode: composes dynamics, platform motion, wind and reward behind
// a reset/step interface.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

#include "lander/common.hpp"
#include "lander/dynamics.hpp"
#include "lander/reward.hpp"
#include "lander/scenario.hpp"

namespace lander {

inline constexpr int kObservationSize = 15;
inline constexpr int kActionSize = 3;

/// attitude(3) | linear velocity(3) | angular velocity(3) | pad - drone position(3) | pad - drone velocity(3),
/// each clipped to its bound and divided by it.
using Observation = Eigen::Matrix<double, kObservationSize, 1>;

enum class Terminal { None, Touchdown, Crash, OutOfBounds, Timeout };

inline std::string_view to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "None";
    case Terminal::Touchdown: return "Touchdown";
    case Terminal::Crash: return "Crash";
    case Terminal::OutOfBounds: return "OutOfBounds";
    case Terminal::Timeout: return "Timeout";
  }
  return "?";
}

inline std::optional<Terminal> parse_terminal(std::string_view s) {
  for (auto t : {Terminal::None, Terminal::Touchdown, Terminal::Crash, Terminal::OutOfBounds, Terminal::Timeout})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

struct EnvConfig {
  double episode_cap = 20.0;  // s
  int control_hz = 30;
  int physics_hz = 240;
  double action_scale = 0.1;  // m per unit action

  Vec3 attitude_bound = Vec3::Constant(M_PI);
  Vec3 velocity_bound = Vec3(3.0, 3.0, 2.0);
  Vec3 angular_velocity_bound = Vec3::Constant(10.0);
  Vec3 rel_position_bound = Vec3::Constant(2.0);
  Vec3 rel_velocity_bound = Vec3(3.5, 3.5, 2.5);

  double touchdown_vertical = 0.05;  // m above pad top
  double touchdown_speed = 0.5;      // m/s relative
  double out_of_bounds_radius = 3.0;

  // Optional one-off reward added on the terminal transition. Both are zero by
  // default so the per-step reward is the only signal unless a run opts in.
  double touchdown_bonus = 0.0;
  double failure_penalty = 0.0;  // subtracted on Crash and OutOfBounds

  double spawn_radius = 1.5;
  double spawn_altitude_min = 0.5;
  double spawn_altitude_max = 1.5;

  void validate() const {
    if (control_hz <= 0 || physics_hz <= 0 || physics_hz % control_hz != 0)
      throw ConfigError("env: physics_hz must be a positive integer multiple of control_hz");
    if (!(action_scale > 0.0 && action_scale <= kMaxSetpointDelta))
      throw ConfigError("env.action_scale must lie in (0, 0.1]");
    if (!(episode_cap > 0.0)) throw ConfigError("env.episode_cap must be > 0");
    for (const Vec3* b : {&attitude_bound, &velocity_bound, &angular_velocity_bound, &rel_position_bound,
                          &rel_velocity_bound})
      if (!(b->minCoeff() > 0.0) || !b->allFinite()) throw ConfigError("env: normalization bounds must be > 0");
    if (!(touchdown_vertical > 0.0 && touchdown_speed > 0.0)) throw ConfigError("env: touchdown tolerances must be > 0");
    if (!(out_of_bounds_radius > 0.0)) throw ConfigError("env.out_of_bounds_radius must be > 0");
    if (!std::isfinite(touchdown_bonus) || !(failure_penalty >= 0.0) || !std::isfinite(failure_penalty))
      throw ConfigError("env: touchdown_bonus must be finite and failure_penalty finite and >= 0");
    if (!(spawn_radius > 0.0 && spawn_altitude_min >= 0.0 && spawn_altitude_max > spawn_altitude_min &&
          spawn_altitude_min < spawn_radius))
      throw ConfigError("env: inconsistent spawn region");
  }

  int substeps() const { return physics_hz / control_hz; }
  long cap_ticks() const { return std::lround(episode_cap * physics_hz); }
};

/// Everything needed to build an environment.
struct WorldConfig {
  EnvConfig env;
  DroneParams dynamics;
  ScenarioSpec scenario;
  WindConfig wind;
  RewardConfig reward;

  void validate() const {
    env.validate();
    dynamics.validate();
    scenario.validate();
    wind.validate();
    reward.validate();
    if (std::abs(dynamics.physics_dt * env.physics_hz - 1.0) > 1e-9)
      throw ConfigError("dynamics.physics_dt must equal 1 / env.physics_hz");
  }
};

inline Observation build_observation(const DroneState& drone, const PlatformState& pad, const EnvConfig& cfg) {
  if (!drone.finite() || !pad.position.allFinite() || !pad.velocity.allFinite())
    throw StateCorruptionError("build_observation: non-finite state");
  Observation o;
  auto put = [&](int at, const Vec3& raw, const Vec3& bound) {
    o.segment<3>(at) = clamp_box(raw, bound).cwiseQuotient(bound);
  };
  put(0, drone.attitude, cfg.attitude_bound);
  put(3, drone.velocity, cfg.velocity_bound);
  put(6, drone.angular_velocity, cfg.angular_velocity_bound);
  put(9, pad.position - drone.position, cfg.rel_position_bound);
  put(12, pad.velocity - drone.velocity, cfg.rel_velocity_bound);
  return o;
}

struct StepInfo {
  DroneState drone;
  PlatformState pad;
  Vec3 wind_force = Vec3::Zero();
  Vec3 action = Vec3::Zero();
  double time = 0.0;
  long step_index = 0;  // 1-based count of control steps taken
};

struct StepOutcome {
  Observation observation;
  RewardBreakdown reward;
  Terminal terminal = Terminal::None;
  StepInfo info;
};

/// Contact classification against the pad top at one instant.
inline Terminal classify_contact(const DroneState& drone, const PlatformState& pad, const EnvConfig& cfg) {
  const Vec3 rel = drone.position - pad.position;
  if (drone.position.z() < 0.0) return Terminal::Crash;  // ground
  const bool over_pad = std::abs(rel.x()) <= pad.half_extent && std::abs(rel.y()) <= pad.half_extent;
  if (!over_pad || rel.z() > cfg.touchdown_vertical) return Terminal::None;
  if (rel.z() < 0.0) return Terminal::Crash;  // inside the platform volume
  const double speed = (drone.velocity - pad.velocity).norm();
  return speed <= cfg.touchdown_speed ? Terminal::Touchdown : Terminal::Crash;
}

class Environment {
 public:
  explicit Environment(WorldConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const WorldConfig& config() const { return cfg_; }

  Observation reset(std::int64_t seed) {
    if (seed < 0) throw ContractError("Environment::reset: seed must be non-negative");
    const auto root = static_cast<std::uint64_t>(seed);
    spec_ = cfg_.scenario;
    spec_.seed = derive_seed(root, "scenario");
    Rng wind_rng = make_rng(root, "wind");
    wind_ = init_wind(wind_rng, cfg_.wind);
    wind_rng_ = wind_rng;

    ticks_ = 0;
    steps_ = 0;
    terminal_ = Terminal::None;
    pad_ = platform_at(spec_, 0.0);

    Rng spawn_rng = make_rng(root, "spawn");
    const auto& e = cfg_.env;
    Vec3 offset;
    do {
      offset = Vec3(uniform(spawn_rng, -e.spawn_radius, e.spawn_radius),
                    uniform(spawn_rng, -e.spawn_radius, e.spawn_radius),
                    uniform(spawn_rng, e.spawn_altitude_min, e.spawn_altitude_max));
    } while (offset.norm() > e.spawn_radius);
    drone_ = DroneState::hovering_at(pad_.position + offset);
    prev_distance_ = offset.norm();
    started_ = true;
    return build_observation(drone_, pad_, e);
  }

  StepOutcome step(const Vec3& raw_action) {
    if (!started_) throw ContractError("Environment::step before reset");
    if (terminal_ != Terminal::None) throw ContractError("Environment::step on a terminated episode");
    if (!raw_action.allFinite()) throw ContractError("Environment::step: non-finite action");
    if (raw_action.cwiseAbs().maxCoeff() > 1.0 + 1e-6)
      throw ContractError("Environment::step: action outside [-1, 1]");
    const Vec3 action = raw_action.cwiseMax(-1.0).cwiseMin(1.0);
    const auto& e = cfg_.env;

    drone_ = apply_setpoint_delta(drone_, e.action_scale * action);
    wind_ = sample_wind_step(wind_, wind_rng_);

    Terminal contact = Terminal::None;
    for (int i = 0; i < e.substeps(); ++i) {
      drone_ = step_drone(drone_, cfg_.dynamics, wind_.force, cfg_.dynamics.physics_dt);
      ++ticks_;
      pad_ = platform_at(spec_, time());
      contact = classify_contact(drone_, pad_, e);
      if (contact != Terminal::None) break;
    }
    ++steps_;

    StepOutcome out;
    const Vec3 rel_pos = pad_.position - drone_.position;
    const Vec3 rel_vel = drone_.velocity - pad_.velocity;
    const double d = rel_pos.norm();
    const bool below = drone_.position.z() < pad_.position.z();
    const bool edge = rel_pos.head<2>().cwiseAbs().maxCoeff() > cfg_.reward.edge_threshold;
    out.reward = compute_reward(rel_pos, rel_vel, prev_distance_, std::nullopt, below, edge, cfg_.reward);
    prev_distance_ = d;

    if (contact != Terminal::None)
      terminal_ = contact;
    else if (d > e.out_of_bounds_radius)
      terminal_ = Terminal::OutOfBounds;
    else if (ticks_ >= e.cap_ticks())
      terminal_ = Terminal::Timeout;

    if (terminal_ == Terminal::Touchdown)
      out.reward.terminal_term = e.touchdown_bonus;
    else if (terminal_ == Terminal::Crash || terminal_ == Terminal::OutOfBounds)
      out.reward.terminal_term = -e.failure_penalty;
    out.reward.total += out.reward.terminal_term;

    out.terminal = terminal_;
    out.observation = build_observation(drone_, pad_, e);
    out.info = StepInfo{drone_, pad_, wind_.force, action, time(), steps_};
    return out;
  }

  double time() const { return static_cast<double>(ticks_) / cfg_.env.physics_hz; }
  double control_dt() const { return 1.0 / cfg_.env.control_hz; }
  long steps() const { return steps_; }
  Terminal terminal() const { return terminal_; }
  const DroneState& drone() const { return drone_; }
  const PlatformState& pad() const { return pad_; }
  const WindState& wind() const { return wind_; }
  const ScenarioSpec& episode_scenario() const { return spec_; }
  Observation observation() const { return build_observation(drone_, pad_, cfg_.env); }

  /// Overrides the drone state mid-episode (scripted tests and fuzzing).
  void set_drone(const DroneState& s) {
    if (!s.finite()) throw StateCorruptionError("Environment::set_drone: non-finite state");
    drone_ = s;
    prev_distance_ = (pad_.position - drone_.position).norm();
  }

 private:
  WorldConfig cfg_;
  ScenarioSpec spec_;
  DroneState drone_;
  PlatformState pad_;
  WindState wind_;
  Rng wind_rng_;
  long ticks_ = 0;
  long steps_ = 0;
  Terminal terminal_ = Terminal::None;
  double prev_distance_ = 0.0;
  bool started_ = false;
};

}  // namespace lander
