// Benchmark runner: scenarios x seeded trials for the learned agent and the
// EKF+PID baseline, aggregated into success rate, landing precision and
// drone/pad velocity correlation statistics.
#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lander/baseline.hpp"
#include "lander/common.hpp"
#include "lander/environment.hpp"
#include "lander/mlp.hpp"
#include "lander/scenario.hpp"
#include "lander/trace.hpp"

namespace lander {

enum class ControllerKind { Agent, EkfPid };

inline std::string_view to_string(ControllerKind c) { return c == ControllerKind::Agent ? "Agent" : "EkfPid"; }

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControllerKind kind() const = 0;
  virtual void reset(const Environment& env, std::uint64_t seed) = 0;
  /// Action in [-1, 1]^3 for the current environment state.
  virtual Vec3 act(const Environment& env) = 0;
  virtual std::optional<Vec6> estimate() const { return std::nullopt; }
};

class AgentController final : public Controller {
 public:
  explicit AgentController(Mlp<float> actor) : actor_(std::move(actor)) {
    if (actor_.input_size() != kObservationSize || actor_.output_size() != kActionSize)
      throw ContractError("AgentController: actor must map 15 observations to 3 actions");
  }
  ControllerKind kind() const override { return ControllerKind::Agent; }
  void reset(const Environment&, std::uint64_t) override {}
  Vec3 act(const Environment& env) override {
    const Eigen::VectorXf a = actor_.forward(env.observation().cast<float>());
    return a.cast<double>().cwiseMax(-1.0).cwiseMin(1.0);
  }

 private:
  Mlp<float> actor_;
};

class BaselineController final : public Controller {
 public:
  explicit BaselineController(BaselineConfig cfg = {}) : pilot_(cfg) {}
  ControllerKind kind() const override { return ControllerKind::EkfPid; }
  void reset(const Environment& env, std::uint64_t seed) override {
    pilot_.reset(env.drone(), env.pad().position, env.control_dt(), seed);
    action_scale_ = env.config().env.action_scale;
  }
  Vec3 act(const Environment& env) override {
    const Vec3 delta = pilot_.command(env.drone(), env.pad().position);
    return (delta / action_scale_).cwiseMax(-1.0).cwiseMin(1.0);
  }
  std::optional<Vec6> estimate() const override { return pilot_.estimate().x; }

 private:
  EkfPidPilot pilot_;
  double action_scale_ = 0.1;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

/// Pearson correlation of two equal-length series; nullopt when either series
/// has (numerically) zero variance.
inline std::optional<double> velocity_correlation(std::span<const double> drone, std::span<const double> pad) {
  if (drone.size() != pad.size()) throw ContractError("velocity_correlation: series lengths differ");
  if (drone.size() < 2) throw ContractError("velocity_correlation: need at least 2 samples");
  const auto n = static_cast<double>(drone.size());
  const double ma = std::accumulate(drone.begin(), drone.end(), 0.0) / n;
  const double mb = std::accumulate(pad.begin(), pad.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < drone.size(); ++i) {
    const double a = drone[i] - ma, b = pad[i] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  auto degenerate = [&](double ss, double mean) { return ss <= 1e-20 * n * std::max(1.0, mean * mean); };
  if (degenerate(saa, ma) || degenerate(sbb, mb)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Correlation between drone and pad velocities over an approach: the x, y and
/// z component series of each are concatenated and correlated.
inline std::optional<double> trace_velocity_correlation(const std::vector<TraceRow>& rows) {
  if (rows.size() < 2) return std::nullopt;
  std::vector<double> drone, pad;
  for (int axis = 0; axis < 3; ++axis)
    for (const auto& r : rows) {
      drone.push_back(r.velocity[axis]);
      pad.push_back(r.pad_velocity[axis]);
    }
  return velocity_correlation(drone, pad);
}

struct TrialResult {
  ScenarioKind scenario = ScenarioKind::SPL;
  ControllerKind controller = ControllerKind::Agent;
  int trial_index = 0;
  std::int64_t seed = 0;
  Terminal terminal = Terminal::None;
  std::optional<double> touchdown_lateral_error;
  double duration = 0.0;
  std::optional<double> velocity_correlation;
  bool wind_enabled = false;
  std::string failure;  // non-empty when the controller or environment threw

  bool success() const { return terminal == Terminal::Touchdown && failure.empty(); }
};

/// Episode seed shared by every controller for (scenario, trial index).
inline std::int64_t trial_seed(std::uint64_t root, ScenarioKind s, int index) {
  return static_cast<std::int64_t>(
      derive_seed(root, std::string("trial/") + std::string(to_string(s)), static_cast<std::uint64_t>(index)) >> 1);
}

/// Wind is injected only for the agent on SPL and LMPL; every such trial is windy.
inline bool wind_applies(bool wind, ControllerKind c, ScenarioKind s) {
  return wind && c == ControllerKind::Agent && (s == ScenarioKind::SPL || s == ScenarioKind::LMPL);
}

inline TrialResult run_trial(Controller& controller, const WorldConfig& base, ScenarioKind scenario,
                             int trial_index, std::int64_t seed, bool wind, std::vector<TraceRow>* trace = nullptr) {
  WorldConfig world = base;
  world.scenario.kind = scenario;
  TrialResult res;
  res.scenario = scenario;
  res.controller = controller.kind();
  res.trial_index = trial_index;
  res.seed = seed;
  res.wind_enabled = wind_applies(wind, controller.kind(), scenario);
  world.wind.p_episode = res.wind_enabled ? 1.0 : 0.0;

  std::vector<TraceRow> rows;
  try {
    Environment env(world);
    env.reset(seed);
    controller.reset(env, static_cast<std::uint64_t>(seed));
    for (;;) {
      const StepOutcome out = env.step(controller.act(env));
      TraceRow row = TraceRow::from(out);
      row.estimate = controller.estimate();
      rows.push_back(row);
      if (out.terminal != Terminal::None) break;
    }
    res.terminal = env.terminal();
    res.duration = env.time();
  } catch (const std::exception& e) {
    res.failure = e.what();
  }
  if (res.failure.empty() && res.terminal == Terminal::Touchdown)
    res.touchdown_lateral_error = (rows.back().position - rows.back().pad_position).head<2>().norm();
  res.velocity_correlation = trace_velocity_correlation(rows);
  if (trace) *trace = std::move(rows);
  return res;
}

struct SummaryStats {
  double mean = 0.0, median = 0.0, std = 0.0, min = 0.0, max = 0.0;
  int count = 0;
};

/// Population statistics; nullopt for an empty sample.
inline std::optional<SummaryStats> summarize(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  SummaryStats s;
  s.count = static_cast<int>(xs.size());
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  s.min = xs.front();
  s.max = xs.back();
  const std::size_t m = xs.size() / 2;
  s.median = xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
  return s;
}

struct ScenarioReport {
  ScenarioKind scenario = ScenarioKind::SPL;
  ControllerKind controller = ControllerKind::Agent;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::optional<SummaryStats> precision;    // lateral error over successful trials
  std::optional<SummaryStats> correlation;  // over trials with a defined correlation
  bool wind_enabled = false;
};

struct BenchmarkReport {
  std::vector<ScenarioReport> entries;
  std::vector<TrialResult> trials;
};

inline ScenarioReport aggregate(ScenarioKind s, ControllerKind c, std::span<const TrialResult> trials) {
  ScenarioReport r;
  r.scenario = s;
  r.controller = c;
  std::vector<double> precision, corr;
  for (const auto& t : trials) {
    ++r.trials;
    if (t.success()) {
      ++r.successes;
      precision.push_back(*t.touchdown_lateral_error);
    }
    if (t.velocity_correlation) corr.push_back(*t.velocity_correlation);
    r.wind_enabled = r.wind_enabled || t.wind_enabled;
  }
  r.success_rate = r.trials ? static_cast<double>(r.successes) / r.trials : 0.0;
  r.precision = summarize(precision);
  r.correlation = summarize(corr);
  return r;
}

struct BenchmarkOptions {
  std::vector<ScenarioKind> scenarios{kAllScenarios.begin(), kAllScenarios.end()};
  int trials_per_scenario = 10;
  bool wind = false;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Receives each trial's trace (called from the aggregating thread, in trial order).
  std::function<void(const TrialResult&, const std::vector<TraceRow>&)> trace_sink;
};

inline BenchmarkReport run_benchmark(const ControllerFactory& make_controller, const WorldConfig& world,
                                     const BenchmarkOptions& opts) {
  if (opts.trials_per_scenario < 1) throw ContractError("run_benchmark: trials must be >= 1");
  if (opts.workers < 1) throw ContractError("run_benchmark: workers must be >= 1");
  world.validate();

  struct Job {
    ScenarioKind scenario;
    int index;
  };
  std::vector<Job> jobs;
  for (auto s : opts.scenarios)
    for (int i = 0; i < opts.trials_per_scenario; ++i) jobs.push_back({s, i});

  std::vector<TrialResult> results(jobs.size());
  std::vector<std::vector<TraceRow>> traces(jobs.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    auto controller = make_controller();
    for (std::size_t j = first; j < jobs.size(); j += stride) {
      const auto seed = trial_seed(opts.seed, jobs[j].scenario, jobs[j].index);
      results[j] = run_trial(*controller, world, jobs[j].scenario, jobs[j].index, seed, opts.wind, &traces[j]);
    }
  };
  const auto workers = static_cast<std::size_t>(opts.workers);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  BenchmarkReport report;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (opts.trace_sink) opts.trace_sink(results[j], traces[j]);
  std::size_t at = 0;
  for (auto s : opts.scenarios) {
    const std::span<const TrialResult> block(results.data() + at, static_cast<std::size_t>(opts.trials_per_scenario));
    report.entries.push_back(aggregate(s, block.front().controller, block));
    at += static_cast<std::size_t>(opts.trials_per_scenario);
  }
  report.trials = std::move(results);
  return report;
}

// --- report rendering -------------------------------------------------------------

inline std::string opt_str(const std::optional<double>& v, int digits = 4) {
  if (!v) return "n/a";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << *v;
  return s.str();
}

inline void write_report_text(std::ostream& out, const BenchmarkReport& report) {
  auto row = [&](std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      out << (first ? "" : " ");
      out.width(first ? 14 : 11);
      out << std::left << c;
      first = false;
    }
    out << "\n";
  };
  out << "Landing success rate\n";
  row({"scenario", "controller", "trials", "successes", "rate", "wind"});
  for (const auto& e : report.entries)
    row({std::string(to_string(e.scenario)), std::string(to_string(e.controller)), std::to_string(e.trials),
         std::to_string(e.successes), opt_str(100.0 * e.success_rate, 1) + "%", e.wind_enabled ? "yes" : "no"});
  out << "\nLanding precision [m] (successful trials)\n";
  row({"scenario", "controller", "mean", "std"});
  for (const auto& e : report.entries) {
    auto p = e.precision;
    row({std::string(to_string(e.scenario)), std::string(to_string(e.controller)),
         opt_str(p ? std::optional(p->mean) : std::nullopt), opt_str(p ? std::optional(p->std) : std::nullopt)});
  }
  out << "\nDrone/pad velocity correlation\n";
  row({"scenario", "controller", "mean", "median", "std", "min", "max", "defined"});
  for (const auto& e : report.entries) {
    const auto& c = e.correlation;
    auto f = [&](double SummaryStats::*m) { return opt_str(c ? std::optional((*c).*m) : std::nullopt); };
    row({std::string(to_string(e.scenario)), std::string(to_string(e.controller)), f(&SummaryStats::mean),
         f(&SummaryStats::median), f(&SummaryStats::std), f(&SummaryStats::min), f(&SummaryStats::max),
         std::to_string(c ? c->count : 0) + "/" + std::to_string(e.trials)});
  }
}

inline std::string csv_opt(const std::optional<double>& v) { return v ? format_g(*v, 17) : ""; }

inline void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "scenario,controller,trials,successes,success_rate,precision_mean,precision_std,"
         "corr_mean,corr_median,corr_std,corr_min,corr_max,corr_count,wind\n";
  for (const auto& e : report.entries) {
    const auto& p = e.precision;
    const auto& c = e.correlation;
    out << to_string(e.scenario) << "," << to_string(e.controller) << "," << e.trials << "," << e.successes << ","
        << format_g(e.success_rate, 17) << "," << csv_opt(p ? std::optional(p->mean) : std::nullopt) << ","
        << csv_opt(p ? std::optional(p->std) : std::nullopt) << ","
        << csv_opt(c ? std::optional(c->mean) : std::nullopt) << ","
        << csv_opt(c ? std::optional(c->median) : std::nullopt) << ","
        << csv_opt(c ? std::optional(c->std) : std::nullopt) << ","
        << csv_opt(c ? std::optional(c->min) : std::nullopt) << ","
        << csv_opt(c ? std::optional(c->max) : std::nullopt) << "," << (c ? c->count : 0) << ","
        << (e.wind_enabled ? 1 : 0) << "\n";
  }
}

inline void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << "scenario,controller,trial,seed,terminal,lateral_error,duration,velocity_correlation,wind,failure\n";
  for (const auto& t : trials) {
    std::string failure = t.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    out << to_string(t.scenario) << "," << to_string(t.controller) << "," << t.trial_index << "," << t.seed << ","
        << to_string(t.terminal) << "," << csv_opt(t.touchdown_lateral_error) << "," << format_g(t.duration, 17)
        << "," << csv_opt(t.velocity_correlation) << "," << (t.wind_enabled ? 1 : 0) << "," << failure << "\n";
  }
}

inline nlohmann::ordered_json report_json(const BenchmarkReport& report) {
  auto stats = [](const std::optional<SummaryStats>& s) -> nlohmann::ordered_json {
    if (!s) return nullptr;
    return {{"mean", s->mean}, {"median", s->median}, {"std", s->std}, {"min", s->min}, {"max", s->max},
            {"count", s->count}};
  };
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : report.entries)
    j.push_back({{"scenario", to_string(e.scenario)},
                 {"controller", to_string(e.controller)},
                 {"trials", e.trials},
                 {"successes", e.successes},
                 {"success_rate", e.success_rate},
                 {"precision", stats(e.precision)},
                 {"velocity_correlation", stats(e.correlation)},
                 {"wind", e.wind_enabled}});
  return {{"entries", j}};
}

}  // namespace lander
