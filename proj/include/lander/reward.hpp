// Piecewise tanh potential-field reward.
//
//   d >= far_radius          : tanh(gamma)
//   near_radius <= d < far   : tanh(alpha * (prev_distance - d))
//   d < near_radius          : tanh(-U - beta + delta)
//
// with U = 0.5*zeta*d^2 + U_rep(sigma), U_rep = 0.5*eta*(1/sigma - 1/q_max)^2
// inside the cutoff, beta the safety penalty and delta the relative-speed term.
#pragma once

#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "lander/common.hpp"

namespace lander {

struct RewardConfig {
  double gamma = -1.0;
  double alpha = 5.0;
  double zeta = 0.5;
  double eta = 0.1;
  double q_max = 0.4;
  double beta_below = 0.5;
  double beta_edge = 0.25;
  double k_delta = 0.3;
  double far_radius = 2.0;
  double near_radius = 0.1;
  bool repulsive_enabled = false;
  /// Lateral offset from the pad center beyond which `near_edge` is raised [m].
  double edge_threshold = 0.05;

  void validate() const {
    if (!(near_radius > 0.0 && far_radius > near_radius))
      throw ConfigError("reward: require far_radius > near_radius > 0");
    if (!(q_max > 0.0)) throw ConfigError("reward.q_max must be > 0");
    if (!(edge_threshold >= 0.0)) throw ConfigError("reward.edge_threshold must be >= 0");
  }
};

enum class RewardCase { Far, Mid, Near };

inline std::string_view to_string(RewardCase c) {
  switch (c) {
    case RewardCase::Far: return "Far";
    case RewardCase::Mid: return "Mid";
    case RewardCase::Near: return "Near";
  }
  return "?";
}

struct RewardBreakdown {
  double total = 0.0;
  RewardCase case_id = RewardCase::Far;
  double u_attractive = 0.0;
  double u_repulsive = 0.0;
  double beta_term = 0.0;
  double delta_term = 0.0;
  double progress = 0.0;  // prev_distance - d
  double terminal_term = 0.0;  // set by the environment on terminal transitions
};

inline double repulsive_potential(double sigma, const RewardConfig& cfg) {
  if (!cfg.repulsive_enabled || !(sigma < cfg.q_max)) return 0.0;
  if (sigma <= 0.0) throw ContactError("repulsive potential at zero obstacle distance (collision)");
  const double g = 1.0 / sigma - 1.0 / cfg.q_max;
  return 0.5 * cfg.eta * g * g;
}

inline double attractive_potential(double d, const RewardConfig& cfg) { return 0.5 * cfg.zeta * d * d; }

/// Speed term: penalizes lateral relative speed and climbing; descent is free.
/// rel_vel is drone velocity minus pad velocity, so rel_vel.z() > 0 is climbing.
inline double speed_term(const Vec3& rel_vel, const RewardConfig& cfg) {
  return -cfg.k_delta * (rel_vel.head<2>().norm() + std::max(0.0, rel_vel.z()));
}

/// `rel_pos` is the pad position relative to the drone (only its norm matters);
/// `rel_vel` is drone velocity minus pad velocity.
inline RewardBreakdown compute_reward(const Vec3& rel_pos, const Vec3& rel_vel, double prev_distance,
                                      std::optional<double> obstacle_distance, bool below_pad,
                                      bool near_edge, const RewardConfig& cfg) {
  if (!(prev_distance >= 0.0) || !std::isfinite(prev_distance))
    throw ContractError("compute_reward: prev_distance must be finite and >= 0");
  if (!rel_pos.allFinite() || !rel_vel.allFinite())
    throw ContractError("compute_reward: non-finite relative state");
  if (obstacle_distance && !std::isfinite(*obstacle_distance))
    throw ContractError("compute_reward: non-finite obstacle distance");

  RewardBreakdown out;
  const double d = rel_pos.norm();
  out.progress = prev_distance - d;

  if (d >= cfg.far_radius) {
    out.case_id = RewardCase::Far;
    out.total = std::tanh(cfg.gamma);
  } else if (d >= cfg.near_radius) {
    out.case_id = RewardCase::Mid;
    out.total = std::tanh(cfg.alpha * out.progress);
  } else {
    out.case_id = RewardCase::Near;
    out.u_attractive = attractive_potential(d, cfg);
    out.u_repulsive = obstacle_distance ? repulsive_potential(*obstacle_distance, cfg) : 0.0;
    out.beta_term = (below_pad ? cfg.beta_below : 0.0) + (near_edge ? cfg.beta_edge : 0.0);
    out.delta_term = speed_term(rel_vel, cfg);
    out.total = std::tanh(-out.u_attractive - out.u_repulsive - out.beta_term + out.delta_term);
  }
  return out;
}

struct RewardSurfaceCell {
  double x = 0.0;  // drone offset from pad center
  double y = 0.0;
  double z = 0.0;
  RewardBreakdown reward;
};

/// Reward on a regular XY grid over [-xy_range, xy_range]^2 at fixed altitude
/// above the pad, with zero velocities and zero progress. Row-major (y outer).
inline std::vector<RewardSurfaceCell> reward_surface_grid(double z_slice, double xy_range, int resolution,
                                                          const RewardConfig& cfg) {
  if (resolution < 2) throw ContractError("reward_surface_grid: resolution must be >= 2");
  if (!(xy_range > 0.0) || !std::isfinite(z_slice)) throw ContractError("reward_surface_grid: bad extent");
  std::vector<RewardSurfaceCell> grid;
  grid.reserve(static_cast<std::size_t>(resolution) * resolution);
  const double step = 2.0 * xy_range / (resolution - 1);
  for (int j = 0; j < resolution; ++j) {
    const double y = -xy_range + step * j;
    for (int i = 0; i < resolution; ++i) {
      const double x = -xy_range + step * i;
      const Vec3 offset(x, y, z_slice);
      const double d = offset.norm();
      const bool below = z_slice < 0.0;
      const bool edge = std::max(std::abs(x), std::abs(y)) > cfg.edge_threshold;
      grid.push_back({x, y, z_slice, compute_reward(-offset, Vec3::Zero(), d, std::nullopt, below, edge, cfg)});
    }
  }
  return grid;
}

}  // namespace lander
