// Moving-platform trajectories and the stochastic wind-force process.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "lander/common.hpp"

namespace lander {

/// Per-component platform speed limit [m/s].
inline constexpr double kPlatformSpeedLimit = 0.46;

enum class ScenarioKind { SPL, LMPL, CMPL, CTL };

inline constexpr std::array<ScenarioKind, 4> kAllScenarios{ScenarioKind::SPL, ScenarioKind::LMPL,
                                                           ScenarioKind::CMPL, ScenarioKind::CTL};

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::SPL: return "SPL";
    case ScenarioKind::LMPL: return "LMPL";
    case ScenarioKind::CMPL: return "CMPL";
    case ScenarioKind::CTL: return "CTL";
  }
  return "?";
}

inline std::optional<ScenarioKind> parse_scenario(std::string_view name) {
  for (auto k : kAllScenarios)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

struct PlatformState {
  Vec3 position = Vec3::Zero();  // pad center, top surface
  Vec3 velocity = Vec3::Zero();
  double half_extent = 0.25;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::SPL;
  std::uint64_t seed = 0;
  double direction_change_period = 3.0;  // s
  double curve_radius = 0.5;             // m
  double vertical_amplitude = 0.2;       // m, CTL only
  double vertical_period = 4.0;          // s, CTL only
  double speed = 0.3;                    // m/s
  double half_extent = 0.25;             // m
  Vec3 origin = Vec3(0.0, 0.0, 0.5);     // pad top center at t = 0
  /// Heading of the first segment [rad]; drawn from `seed` when unset.
  std::optional<double> initial_heading;

  void validate() const {
    if (!(speed >= 0.0 && speed <= kPlatformSpeedLimit))
      throw ConfigError("scenario.speed must lie in [0, 0.46]");
    if (!(direction_change_period > 0.0)) throw ConfigError("scenario.direction_change_period must be > 0");
    if (!(curve_radius > 0.0)) throw ConfigError("scenario.curve_radius must be > 0");
    if (!(half_extent > 0.0)) throw ConfigError("scenario.half_extent must be > 0");
    if (!(vertical_period > 0.0)) throw ConfigError("scenario.vertical_period must be > 0");
    if (!(vertical_amplitude >= 0.0)) throw ConfigError("scenario.vertical_amplitude must be >= 0");
    if (vertical_amplitude * 2.0 * M_PI / vertical_period > kPlatformSpeedLimit)
      throw ConfigError("scenario: vertical_amplitude * 2pi / vertical_period exceeds 0.46 m/s");
    if (!origin.allFinite()) throw ConfigError("scenario.origin must be finite");
  }
};

namespace detail {

inline double segment_heading(const ScenarioSpec& spec, std::uint64_t segment) {
  if (segment == 0 && spec.initial_heading) return *spec.initial_heading;
  const std::uint64_t bits = derive_seed(spec.seed, "platform-heading", segment);
  return 2.0 * M_PI * (static_cast<double>(bits >> 11) * 0x1.0p-53);
}

// Arc on segment k: heading phi(tau) = phi_k + dir*w*tau, dir alternating per segment.
struct ArcPose {
  Vec3 offset;  // displacement from origin (XY)
  double heading;
};

inline ArcPose arc_pose(const ScenarioSpec& spec, double t) {
  const double period = spec.direction_change_period;
  const double r = spec.curve_radius;
  const double w = spec.speed / r;
  const auto seg = static_cast<std::uint64_t>(std::floor(t / period));
  Vec3 p = Vec3::Zero();
  double phi = segment_heading(spec, 0);
  for (std::uint64_t k = 0; k <= seg; ++k) {
    const double dir = (k % 2 == 0) ? 1.0 : -1.0;
    const double tau = (k == seg) ? t - static_cast<double>(seg) * period : period;
    const double phi_end = phi + dir * w * tau;
    p.x() += dir * r * (std::sin(phi_end) - std::sin(phi));
    p.y() += -dir * r * (std::cos(phi_end) - std::cos(phi));
    phi = phi_end;
  }
  return {p, phi};
}

}  // namespace detail

/// Circle the CMPL/CTL platform is on at time t (XY center, in world frame).
inline Vec3 arc_center(const ScenarioSpec& spec, double t) {
  const auto seg = static_cast<std::uint64_t>(std::floor(t / spec.direction_change_period));
  const double dir = (seg % 2 == 0) ? 1.0 : -1.0;
  const auto pose = detail::arc_pose(spec, t);
  Vec3 c = spec.origin + pose.offset;
  c.x() += -dir * spec.curve_radius * std::sin(pose.heading);
  c.y() += dir * spec.curve_radius * std::cos(pose.heading);
  c.z() = spec.origin.z();
  return c;
}

/// Platform state at time t. Pure in (spec, t); positions are exact integrals
/// of the reported velocities.
inline PlatformState platform_at(const ScenarioSpec& spec, double t) {
  if (!(t >= 0.0)) throw ContractError("platform_at: t must be >= 0");
  PlatformState out;
  out.half_extent = spec.half_extent;
  out.position = spec.origin;

  switch (spec.kind) {
    case ScenarioKind::SPL:
      break;
    case ScenarioKind::LMPL: {
      const double period = spec.direction_change_period;
      const auto seg = static_cast<std::uint64_t>(std::floor(t / period));
      for (std::uint64_t k = 0; k <= seg; ++k) {
        const double h = detail::segment_heading(spec, k);
        const double tau = (k == seg) ? t - static_cast<double>(seg) * period : period;
        out.position += spec.speed * tau * Vec3(std::cos(h), std::sin(h), 0.0);
        if (k == seg) out.velocity = spec.speed * Vec3(std::cos(h), std::sin(h), 0.0);
      }
      break;
    }
    case ScenarioKind::CMPL:
    case ScenarioKind::CTL: {
      const auto pose = detail::arc_pose(spec, t);
      out.position += pose.offset;
      out.velocity = spec.speed * Vec3(std::cos(pose.heading), std::sin(pose.heading), 0.0);
      if (spec.kind == ScenarioKind::CTL) {
        const double wz = 2.0 * M_PI / spec.vertical_period;
        out.position.z() += spec.vertical_amplitude * std::sin(wz * t);
        out.velocity.z() = spec.vertical_amplitude * wz * std::cos(wz * t);
      }
      break;
    }
  }
  // validate() keeps this a no-op, so positions remain exact integrals.
  out.velocity = clamp_box(out.velocity, Vec3::Constant(kPlatformSpeedLimit));
  return out;
}

// --- wind ---------------------------------------------------------------------

struct WindConfig {
  double p_episode = 0.2;
  double p_step = 0.2;
  double component_bound = 0.005;  // N

  void validate() const {
    if (!(p_episode >= 0.0 && p_episode <= 1.0)) throw ConfigError("wind.p_episode must lie in [0, 1]");
    if (!(p_step >= 0.0 && p_step <= 1.0)) throw ConfigError("wind.p_step must lie in [0, 1]");
    if (!(component_bound >= 0.0)) throw ConfigError("wind.component_bound must be >= 0");
  }
};

struct WindState {
  bool episode_windy = false;
  Vec3 force = Vec3::Zero();
  double p_episode = 0.2;
  double p_step = 0.2;
  double component_bound = 0.005;
};

/// Episode-level draw: the episode is windy when `u < p_episode`.
inline WindState init_wind_from_sample(double u, const WindConfig& cfg) {
  cfg.validate();
  WindState s;
  s.p_episode = cfg.p_episode;
  s.p_step = cfg.p_step;
  s.component_bound = cfg.component_bound;
  s.episode_windy = u < cfg.p_episode;
  return s;
}

inline WindState init_wind(Rng& rng, const WindConfig& cfg = {}) {
  return init_wind_from_sample(uniform01(rng), cfg);
}

/// Per-step draw. A calm episode consumes no randomness.
inline WindState sample_wind_step(const WindState& state, Rng& rng) {
  WindState next = state;
  next.force = Vec3::Zero();
  if (!state.episode_windy) return next;
  if (uniform01(rng) < state.p_step) {
    for (int i = 0; i < 3; ++i) next.force[i] = uniform(rng, -state.component_bound, state.component_bound);
  }
  return next;
}

}  // namespace lander
