// Run configuration: flat "section.key = value" text with '#' comments.
// Every default can be overridden; unknown keys are rejected.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lander/baseline.hpp"
#include "lander/common.hpp"
#include "lander/environment.hpp"
#include "lander/scenario.hpp"
#include "lander/td3.hpp"

namespace lander {

struct EvaluationConfig {
  int trials = 10;
  bool wind = false;
  int workers = 1;
};

struct RunConfig {
  WorldConfig world;
  Td3Hyperparams td3;
  BaselineConfig baseline;
  EvaluationConfig evaluation;
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  /// Learner state to continue training from (empty: fresh networks).
  std::string init_checkpoint;

  void validate() const {
    world.validate();
    td3.validate();
    baseline.validate();
    if (evaluation.trials < 1) throw ConfigError("evaluation.trials must be >= 1");
    if (evaluation.workers < 1) throw ConfigError("evaluation.workers must be >= 1");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(trim(tok));
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

inline Entry real(std::string key, double& ref) {
  return {key, [&ref] { return fmt(ref); }, [&ref, key](const std::string& v) { ref = to_double(key, v); }};
}

template <typename Int>
Entry integer(std::string key, Int& ref) {
  return {key, [&ref] { return std::to_string(ref); },
          [&ref, key](const std::string& v) { ref = static_cast<Int>(to_integer(key, v)); }};
}

inline Entry seed_entry(std::string key, std::uint64_t& ref) {
  return {key, [&ref] { return std::to_string(ref); },
          [&ref, key](const std::string& v) {
            try {
              std::size_t used = 0;
              if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
              ref = std::stoull(v, &used);
              if (used != v.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
              throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
            }
          }};
}

inline Entry boolean(std::string key, bool& ref) {
  return {key, [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref, key](const std::string& v) {
            if (v == "true") ref = true;
            else if (v == "false") ref = false;
            else throw ConfigError(key + ": expected true or false, got '" + v + "'");
          }};
}

inline Entry vec3(std::string key, Vec3& ref) {
  return {key, [&ref] { return fmt(ref.x()) + "," + fmt(ref.y()) + "," + fmt(ref.z()); },
          [&ref, key](const std::string& v) {
            const auto parts = split_list(v);
            if (parts.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
            for (int i = 0; i < 3; ++i) ref[i] = to_double(key, parts[static_cast<std::size_t>(i)]);
          }};
}

inline Entry int_list(std::string key, std::vector<int>& ref) {
  return {key,
          [&ref] {
            std::string s;
            for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? "," : "") + std::to_string(ref[i]);
            return s;
          },
          [&ref, key](const std::string& v) {
            ref.clear();
            for (const auto& p : split_list(v)) ref.push_back(static_cast<int>(to_integer(key, p)));
          }};
}

inline Entry scenario_kind(std::string key, ScenarioKind& ref) {
  return {key, [&ref] { return std::string(to_string(ref)); },
          [&ref, key](const std::string& v) {
            const auto k = parse_scenario(v);
            if (!k) throw ConfigError(key + ": unknown scenario '" + v + "' (valid: SPL, LMPL, CMPL, CTL)");
            ref = *k;
          }};
}

inline Entry optional_real(std::string key, std::optional<double>& ref) {
  return {key, [&ref] { return ref ? fmt(*ref) : std::string("none"); },
          [&ref, key](const std::string& v) {
            if (v == "none") ref.reset();
            else ref = to_double(key, v);
          }};
}

inline Entry text(std::string key, std::string& ref) {
  return {key, [&ref] { return ref; }, [&ref](const std::string& v) { ref = v; }};
}

}  // namespace config_detail

/// Binds every configurable field of `cfg` to its dotted key, in dump order.
inline std::vector<config_detail::Entry> config_entries(RunConfig& cfg) {
  using namespace config_detail;
  auto& w = cfg.world;
  return {
      seed_entry("seed", cfg.seed),
      text("output_dir", cfg.output_dir),
      text("init_checkpoint", cfg.init_checkpoint),
      real("dynamics.mass", w.dynamics.mass),
      real("dynamics.kp_pos", w.dynamics.kp_pos),
      real("dynamics.tau_v", w.dynamics.tau_v),
      real("dynamics.a_max", w.dynamics.a_max),
      real("dynamics.physics_dt", w.dynamics.physics_dt),
      real("dynamics.gravity", w.dynamics.gravity),
      scenario_kind("scenario.kind", w.scenario.kind),
      real("scenario.direction_change_period", w.scenario.direction_change_period),
      real("scenario.curve_radius", w.scenario.curve_radius),
      real("scenario.vertical_amplitude", w.scenario.vertical_amplitude),
      real("scenario.vertical_period", w.scenario.vertical_period),
      real("scenario.speed", w.scenario.speed),
      real("scenario.half_extent", w.scenario.half_extent),
      vec3("scenario.origin", w.scenario.origin),
      optional_real("scenario.initial_heading", w.scenario.initial_heading),
      real("wind.p_episode", w.wind.p_episode),
      real("wind.p_step", w.wind.p_step),
      real("wind.component_bound", w.wind.component_bound),
      real("reward.gamma", w.reward.gamma),
      real("reward.alpha", w.reward.alpha),
      real("reward.zeta", w.reward.zeta),
      real("reward.eta", w.reward.eta),
      real("reward.q_max", w.reward.q_max),
      real("reward.beta_below", w.reward.beta_below),
      real("reward.beta_edge", w.reward.beta_edge),
      real("reward.k_delta", w.reward.k_delta),
      real("reward.far_radius", w.reward.far_radius),
      real("reward.near_radius", w.reward.near_radius),
      boolean("reward.repulsive_enabled", w.reward.repulsive_enabled),
      real("reward.edge_threshold", w.reward.edge_threshold),
      real("env.episode_cap", w.env.episode_cap),
      integer("env.control_hz", w.env.control_hz),
      integer("env.physics_hz", w.env.physics_hz),
      real("env.action_scale", w.env.action_scale),
      vec3("env.attitude_bound", w.env.attitude_bound),
      vec3("env.velocity_bound", w.env.velocity_bound),
      vec3("env.angular_velocity_bound", w.env.angular_velocity_bound),
      vec3("env.rel_position_bound", w.env.rel_position_bound),
      vec3("env.rel_velocity_bound", w.env.rel_velocity_bound),
      real("env.touchdown_vertical", w.env.touchdown_vertical),
      real("env.touchdown_speed", w.env.touchdown_speed),
      real("env.out_of_bounds_radius", w.env.out_of_bounds_radius),
      real("env.touchdown_bonus", w.env.touchdown_bonus),
      real("env.failure_penalty", w.env.failure_penalty),
      real("env.spawn_radius", w.env.spawn_radius),
      real("env.spawn_altitude_min", w.env.spawn_altitude_min),
      real("env.spawn_altitude_max", w.env.spawn_altitude_max),
      real("td3.learning_rate", cfg.td3.learning_rate),
      integer("td3.batch_size", cfg.td3.batch_size),
      integer("td3.learning_starts", cfg.td3.learning_starts),
      real("td3.discount", cfg.td3.discount),
      real("td3.polyak_tau", cfg.td3.polyak_tau),
      integer("td3.policy_delay", cfg.td3.policy_delay),
      real("td3.target_noise_sigma", cfg.td3.target_noise_sigma),
      real("td3.target_noise_clip", cfg.td3.target_noise_clip),
      real("td3.exploration_noise_sigma", cfg.td3.exploration_noise_sigma),
      integer("td3.total_steps", cfg.td3.total_steps),
      integer("td3.buffer_capacity", cfg.td3.buffer_capacity),
      int_list("td3.hidden", cfg.td3.hidden),
      integer("td3.eval_every", cfg.td3.eval_every),
      integer("td3.eval_episodes", cfg.td3.eval_episodes),
      integer("td3.checkpoint_every", cfg.td3.checkpoint_every),
      vec3("baseline.kp", cfg.baseline.kp),
      vec3("baseline.ki", cfg.baseline.ki),
      vec3("baseline.kd", cfg.baseline.kd),
      real("baseline.integral_clamp", cfg.baseline.integral_clamp),
      real("baseline.output_clamp", cfg.baseline.output_clamp),
      real("baseline.lookahead", cfg.baseline.lookahead),
      real("baseline.descent_rate", cfg.baseline.descent_rate),
      real("baseline.align_radius", cfg.baseline.align_radius),
      real("baseline.measurement_sigma", cfg.baseline.measurement_sigma),
      real("baseline.process_noise", cfg.baseline.process_noise),
      real("baseline.measurement_noise", cfg.baseline.measurement_noise),
      real("baseline.initial_velocity_variance", cfg.baseline.initial_velocity_variance),
      integer("evaluation.trials", cfg.evaluation.trials),
      boolean("evaluation.wind", cfg.evaluation.wind),
      integer("evaluation.workers", cfg.evaluation.workers),
  };
}

/// Applies one "key = value" assignment.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& e : config_entries(cfg))
    if (e.key == key) {
      e.set(value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Applies "key=value" override strings (e.g. from --set).
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set_config_value(cfg, config_detail::trim(assignment.substr(0, eq)), config_detail::trim(assignment.substr(eq + 1)));
}

inline void parse_config(std::istream& in, RunConfig& cfg, const std::string& source = "<config>") {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  RunConfig cfg;
  parse_config(in, cfg, path);
  return cfg;
}

/// Fully resolved config; parse_config of this text reproduces `cfg` exactly.
inline std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out;
  std::string section;
  for (const auto& e : config_entries(copy)) {
    const auto dot = e.key.find('.');
    const std::string s = dot == std::string::npos ? "" : e.key.substr(0, dot);
    if (s != section && !out.empty()) out += "\n";
    section = s;
    out += e.key + " = " + e.get() + "\n";
  }
  return out;
}

}  // namespace lander
