// Command-line entry point: train, benchmark, reward-surface, replay, config-dump.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "lander/lander.hpp"

namespace fs = std::filesystem;
using namespace lander;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file (section.key = value lines)");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set reward.alpha=4");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file not found: '" + config_path + "'");
      cfg = load_config(config_path);
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<ScenarioKind> parse_scenarios(const std::vector<std::string>& names) {
  std::vector<ScenarioKind> out;
  for (const auto& arg : names) {
    for (const auto& name : config_detail::split_list(arg)) {
      if (name == "ALL") {
        out.assign(kAllScenarios.begin(), kAllScenarios.end());
        continue;
      }
      const auto k = parse_scenario(name);
      if (!k) throw UsageError("unknown scenario '" + name + "' (valid: SPL, LMPL, CMPL, CTL, ALL)");
      out.push_back(*k);
    }
  }
  return out;
}

Td3Learner learner_from_checkpoint(const std::string& path, const Td3Hyperparams& base) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: '" + path + "'");
  const auto dims = checkpoint_actor_dims(path);
  if (dims.size() < 3 || dims.front() != kObservationSize || dims.back() != kActionSize)
    throw FormatError("checkpoint '" + path + "': actor dims incompatible with 15 observations / 3 actions");
  Td3Hyperparams hp = base;
  hp.hidden.assign(dims.begin() + 1, dims.end() - 1);
  Td3Learner learner(hp, 0);
  load_checkpoint(path, learner);
  return learner;
}

// --- train -----------------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  long total_steps = -1;
  long long seed = -1;
  std::string scenario;
  std::string out;
  std::string init_checkpoint;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = a.config.resolve();
  if (a.total_steps >= 0) cfg.td3.total_steps = a.total_steps;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (!a.scenario.empty()) set_config_value(cfg, "scenario.kind", a.scenario);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (!a.init_checkpoint.empty()) cfg.init_checkpoint = a.init_checkpoint;
  cfg.validate();

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text(dir / "resolved_config.cfg", dump_config(cfg));

  Td3Learner learner(cfg.td3, derive_seed(cfg.seed, "learner"));
  if (!cfg.init_checkpoint.empty()) {
    if (!fs::exists(cfg.init_checkpoint)) throw UsageError("checkpoint not found: '" + cfg.init_checkpoint + "'");
    load_checkpoint(cfg.init_checkpoint, learner);
  }

  std::ofstream curve(dir / "training_curve.csv", std::ios::trunc);
  curve << "step,mean_reward,mean_ep_len,success_rate\n";
  TrainingOptions opts;
  opts.seed = cfg.seed;
  opts.on_curve_point = [&](const CurvePoint& p) {
    curve << p.step << "," << format_g(p.mean_reward, 9) << "," << format_g(p.mean_ep_len, 9) << ","
          << format_g(p.success_rate, 9) << "\n"
          << std::flush;
    if (!a.quiet)
      std::cerr << "step " << p.step << "  mean_reward " << format_g(p.mean_reward, 5) << "  mean_ep_len "
                << format_g(p.mean_ep_len, 5) << "  success " << format_g(p.success_rate, 3) << "\n";
  };
  opts.checkpoint_sink = [&](long step, const Td3Learner& l) {
    save_checkpoint((dir / ("checkpoint_" + std::to_string(step) + ".ckpt")).string(), l, step);
  };
  const WorldConfig world = cfg.world;
  const auto result = train([&] { return Environment(world); }, learner, opts);
  save_checkpoint((dir / "final.ckpt").string(), learner, result.steps);
  std::cout << "trained " << result.steps << " steps over " << result.episodes << " episodes; outputs in "
            << dir.string() << "\n";
  return 0;
}

// --- benchmark -------------------------------------------------------------------

struct BenchArgs {
  ConfigArgs config;
  std::string checkpoint;
  bool baseline = false;
  std::vector<std::string> scenarios{"ALL"};
  int trials = -1;
  bool wind = false;
  long long seed = -1;
  std::string out;
  std::string run_dir;
  int workers = -1;
  bool no_traces = false;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return s.str();
}

int cmd_benchmark(const BenchArgs& a) {
  if (a.checkpoint.empty() && !a.baseline) throw UsageError("benchmark needs --checkpoint PATH and/or --baseline");
  RunConfig cfg = a.config.resolve();
  if (a.trials >= 0) cfg.evaluation.trials = a.trials;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.wind) cfg.evaluation.wind = true;
  if (a.workers >= 0) cfg.evaluation.workers = a.workers;
  if (!a.out.empty()) cfg.output_dir = a.out;
  const auto scenarios = parse_scenarios(a.scenarios);
  cfg.validate();

  std::vector<std::pair<std::string, ControllerFactory>> controllers;
  if (!a.checkpoint.empty()) {
    const Td3Learner learner = learner_from_checkpoint(a.checkpoint, cfg.td3);
    const Mlp<float> actor = learner.actor();
    controllers.emplace_back("Agent", [actor] { return std::make_unique<AgentController>(actor); });
  }
  if (a.baseline) {
    const BaselineConfig bc = cfg.baseline;
    controllers.emplace_back("EkfPid", [bc] { return std::make_unique<BaselineController>(bc); });
  }

  const fs::path dir = !a.run_dir.empty()
                           ? fs::path(a.run_dir)
                           : fs::path(cfg.output_dir) / ("bench_seed" + std::to_string(cfg.seed) + "_" + timestamp());
  fs::create_directories(dir / "traces");
  write_text(dir / "resolved_config.cfg", dump_config(cfg));

  BenchmarkReport combined;
  for (const auto& [name, factory] : controllers) {
    BenchmarkOptions opts;
    opts.scenarios = scenarios;
    opts.trials_per_scenario = cfg.evaluation.trials;
    opts.wind = cfg.evaluation.wind;
    opts.seed = cfg.seed;
    opts.workers = cfg.evaluation.workers;
    if (!a.no_traces)
      opts.trace_sink = [&dir](const TrialResult& t, const std::vector<TraceRow>& rows) {
        write_trace_file((dir / "traces" /
                          (std::string(to_string(t.scenario)) + "_" + std::string(to_string(t.controller)) + "_" +
                           std::to_string(t.trial_index) + ".csv"))
                             .string(),
                         rows);
      };
    auto report = run_benchmark(factory, cfg.world, opts);
    combined.entries.insert(combined.entries.end(), report.entries.begin(), report.entries.end());
    combined.trials.insert(combined.trials.end(), report.trials.begin(), report.trials.end());
  }

  std::ostringstream text;
  write_report_text(text, combined);
  write_text(dir / "report.txt", text.str());
  std::ostringstream csv;
  write_report_csv(csv, combined);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.json", report_json(combined).dump(2) + "\n");
  std::ostringstream trials;
  write_trials_csv(trials, combined.trials);
  write_text(dir / "trials.csv", trials.str());

  std::cout << text.str() << "\nrun directory: " << dir.string() << "\n";
  return 0;
}

// --- reward-surface --------------------------------------------------------------

struct SurfaceArgs {
  ConfigArgs config;
  double z = 0.5;
  double range = 3.0;
  int res = 101;
  std::string out = "reward_surface.csv";
};

int cmd_reward_surface(const SurfaceArgs& a) {
  if (a.res < 2) throw UsageError("--res must be >= 2");
  if (!(a.range > 0.0)) throw UsageError("--range must be > 0");
  RunConfig cfg = a.config.resolve();
  cfg.validate();
  const auto grid = reward_surface_grid(a.z, a.range, a.res, cfg.world.reward);
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + a.out + "'");
  out << "x,y,z,total,case,u_att,u_rep,beta,delta\n";
  for (const auto& c : grid)
    out << format_g(c.x) << "," << format_g(c.y) << "," << format_g(c.z) << "," << format_g(c.reward.total) << ","
        << to_string(c.reward.case_id) << "," << format_g(c.reward.u_attractive) << ","
        << format_g(c.reward.u_repulsive) << "," << format_g(c.reward.beta_term) << ","
        << format_g(c.reward.delta_term) << "\n";
  std::cout << "wrote " << grid.size() << " cells to " << a.out << "\n";
  return 0;
}

// --- replay ----------------------------------------------------------------------

struct ReplayArgs {
  std::string trace;
  std::size_t downsample = 10;
  std::string out;
};

int cmd_replay(const ReplayArgs& a) {
  std::ifstream in(a.trace);
  if (!in) throw UsageError("cannot read trace '" + a.trace + "'");
  const auto rows = read_trace(in);
  const auto s = summarize_trace(rows);
  auto v3 = [](const Vec3& v) { return format_g(v.x(), 6) + " " + format_g(v.y(), 6) + " " + format_g(v.z(), 6); };
  std::cout << "rows            " << s.rows << "\n"
            << "duration_s      " << format_g(s.duration, 6) << "\n"
            << "terminal        " << to_string(s.terminal) << "\n"
            << "lateral_error_m " << (s.lateral_error ? format_g(*s.lateral_error, 6) : "n/a") << "\n"
            << "min_distance_m  " << format_g(s.min_distance, 6) << "\n"
            << "drone_min       " << v3(s.drone_min) << "\n"
            << "drone_max       " << v3(s.drone_max) << "\n"
            << "pad_min         " << v3(s.pad_min) << "\n"
            << "pad_max         " << v3(s.pad_max) << "\n";
  fs::path out = a.out;
  if (out.empty()) {
    const fs::path t(a.trace);
    out = t.parent_path() / (t.stem().string() + "_downsampled.csv");
  }
  write_trace_file(out.string(), downsample_trace(rows, a.downsample));
  std::cout << "downsampled     " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrotor landing workbench: TD3 agent, EKF+PID baseline, benchmarks"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a TD3 agent");
  train_args.config.attach(train_cmd);
  train_cmd->add_option("--total-steps", train_args.total_steps, "Environment steps");
  train_cmd->add_option("--seed", train_args.seed, "Root seed")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--scenario", train_args.scenario, "Training scenario (SPL, LMPL, CMPL, CTL)");
  train_cmd->add_option("--out", train_args.out, "Output directory");
  train_cmd->add_option("--init-checkpoint", train_args.init_checkpoint, "Continue from a checkpoint");
  train_cmd->add_flag("--quiet", train_args.quiet, "No progress output");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run the scenario benchmark");
  bench_args.config.attach(bench_cmd);
  bench_cmd->add_option("--checkpoint", bench_args.checkpoint, "Agent checkpoint");
  bench_cmd->add_flag("--baseline", bench_args.baseline, "Benchmark the EKF+PID baseline");
  bench_cmd->add_option("--scenario", bench_args.scenarios, "Scenario(s): SPL, LMPL, CMPL, CTL or ALL");
  bench_cmd->add_option("--trials", bench_args.trials, "Trials per scenario")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--wind", bench_args.wind, "Inject wind (agent on SPL and LMPL)");
  bench_cmd->add_option("--seed", bench_args.seed, "Root seed")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--out", bench_args.out, "Parent directory for the run directory");
  bench_cmd->add_option("--run-dir", bench_args.run_dir, "Exact run directory (default: <out>/bench_seed<N>_<time>)");
  bench_cmd->add_option("--workers", bench_args.workers, "Trial worker threads")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--no-traces", bench_args.no_traces, "Skip per-trial trace files");

  SurfaceArgs surf_args;
  auto* surf_cmd = app.add_subcommand("reward-surface", "Export the reward surface on an XY grid");
  surf_args.config.attach(surf_cmd);
  surf_cmd->add_option("--z", surf_args.z, "Altitude above the pad [m]");
  surf_cmd->add_option("--range", surf_args.range, "Grid half-width [m]");
  surf_cmd->add_option("--res", surf_args.res, "Grid points per axis");
  surf_cmd->add_option("--out", surf_args.out, "Output CSV");

  ReplayArgs replay_args;
  auto* replay_cmd = app.add_subcommand("replay", "Summarize and downsample an episode trace");
  replay_cmd->add_option("trace", replay_args.trace, "Trace CSV")->required();
  replay_cmd->add_option("--downsample", replay_args.downsample, "Keep every Nth row")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--out", replay_args.out, "Downsampled CSV path");

  ConfigArgs dump_args;
  auto* dump_cmd = app.add_subcommand("config-dump", "Print the fully resolved configuration");
  dump_args.attach(dump_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*bench_cmd) return cmd_benchmark(bench_args);
    if (*surf_cmd) return cmd_reward_surface(surf_args);
    if (*replay_cmd) return cmd_replay(replay_args);
    if (*dump_cmd) {
      const RunConfig cfg = dump_args.resolve();
      cfg.validate();
      std::cout << dump_config(cfg);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
