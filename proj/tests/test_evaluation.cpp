#include <gtest/gtest.h>

#include <sstream>

#include "lander/evaluation.hpp"

using namespace lander;

namespace {

TrialResult fake_trial(Terminal t, std::optional<double> lateral, std::optional<double> corr = std::nullopt) {
  TrialResult r;
  r.terminal = t;
  r.touchdown_lateral_error = lateral;
  r.velocity_correlation = corr;
  return r;
}

class ThrowingController final : public Controller {
 public:
  ControllerKind kind() const override { return ControllerKind::Agent; }
  void reset(const Environment&, std::uint64_t) override {}
  Vec3 act(const Environment& env) override {
    if (env.steps() == 3) throw std::runtime_error("actuator fault");
    return Vec3::Zero();
  }
};

std::string report_text(const BenchmarkReport& r) {
  std::ostringstream s;
  write_report_csv(s, r);
  write_trials_csv(s, r.trials);
  s << report_json(r).dump();
  return s.str();
}

}  // namespace

TEST(Aggregate, SuccessRateIsExactRatio) {
  std::vector<TrialResult> trials;
  for (int i = 0; i < 8; ++i) trials.push_back(fake_trial(Terminal::Touchdown, 0.1));
  trials.push_back(fake_trial(Terminal::Crash, std::nullopt));
  trials.push_back(fake_trial(Terminal::Timeout, std::nullopt));
  const auto r = aggregate(ScenarioKind::SPL, ControllerKind::EkfPid, trials);
  EXPECT_EQ(r.trials, 10);
  EXPECT_EQ(r.successes, 8);
  EXPECT_EQ(r.success_rate, 0.8);
  EXPECT_EQ(r.precision->count, 8);
}

TEST(Aggregate, PrecisionUsesPopulationStd) {
  std::vector<TrialResult> trials{fake_trial(Terminal::Touchdown, 0.05), fake_trial(Terminal::Touchdown, 0.06),
                                  fake_trial(Terminal::Touchdown, 0.07)};
  const auto r = aggregate(ScenarioKind::SPL, ControllerKind::Agent, trials);
  EXPECT_NEAR(r.precision->mean, 0.06, 1e-15);
  EXPECT_NEAR(r.precision->std, std::sqrt(2.0 / 3.0) * 0.01, 1e-15);
  EXPECT_NEAR(r.precision->std, 0.00816, 5e-6);
  EXPECT_NEAR(r.precision->median, 0.06, 1e-15);
}

TEST(Aggregate, UndefinedCorrelationsAreExcluded) {
  std::vector<TrialResult> trials{fake_trial(Terminal::Crash, std::nullopt, 0.5),
                                  fake_trial(Terminal::Crash, std::nullopt),
                                  fake_trial(Terminal::Crash, std::nullopt, -0.5)};
  const auto r = aggregate(ScenarioKind::LMPL, ControllerKind::Agent, trials);
  EXPECT_EQ(r.correlation->count, 2);
  EXPECT_EQ(r.correlation->mean, 0.0);
  EXPECT_EQ(r.correlation->std, 0.5);
  EXPECT_FALSE(r.precision.has_value());
  EXPECT_EQ(r.success_rate, 0.0);
}

TEST(Summarize, EvenMedianAndEmpty) {
  const auto s = summarize({4, 1, 3, 2});
  EXPECT_EQ(s->median, 2.5);
  EXPECT_EQ(s->min, 1);
  EXPECT_EQ(s->max, 4);
  EXPECT_FALSE(summarize({}).has_value());
}

TEST(Correlation, AffineInvariance) {
  const std::vector<double> pad{0.1, 0.4, 0.2, 0.8, 0.5};
  std::vector<double> drone;
  for (double p : pad) drone.push_back(2 * p + 1);
  EXPECT_NEAR(*velocity_correlation(drone, pad), 1.0, 1e-12);
  for (double& d : drone) d = -d;
  EXPECT_NEAR(*velocity_correlation(drone, pad), -1.0, 1e-12);
}

TEST(Correlation, ZeroVarianceIsUndefined) {
  const std::vector<double> pad(10, 0.0);
  const std::vector<double> drone{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_FALSE(velocity_correlation(drone, pad).has_value());
  EXPECT_THROW(velocity_correlation(std::vector<double>{1.0}, std::vector<double>{1.0}), ContractError);
  EXPECT_THROW(velocity_correlation(drone, std::vector<double>(3, 1.0)), ContractError);
}

TEST(Correlation, PerfectTrackerOnLinearPad) {
  ScenarioSpec spec{.kind = ScenarioKind::LMPL, .seed = 42};
  std::vector<TraceRow> rows;
  for (int k = 1; k <= 600; ++k) {
    const PlatformState p = platform_at(spec, k / 30.0);
    TraceRow r;
    r.pad_position = p.position;
    r.pad_velocity = p.velocity;
    r.position = p.position + Vec3(0, 0, 0.3);
    r.velocity = p.velocity;
    rows.push_back(r);
  }
  EXPECT_NEAR(*trace_velocity_correlation(rows), 1.0, 1e-9);
}

TEST(Correlation, StaticPadTrialIsUndefined) {
  BaselineController ctl;
  const auto res = run_trial(ctl, WorldConfig{}, ScenarioKind::SPL, 0, 5, false);
  EXPECT_FALSE(res.velocity_correlation.has_value());
}

TEST(Trial, ControllerFailureIsRecorded) {
  ThrowingController ctl;
  std::vector<TraceRow> trace;
  const auto res = run_trial(ctl, WorldConfig{}, ScenarioKind::SPL, 0, 1, false, &trace);
  EXPECT_FALSE(res.success());
  EXPECT_NE(res.failure.find("actuator fault"), std::string::npos);
  EXPECT_EQ(trace.size(), 3u);
}

TEST(Trial, LateralErrorPresentIffTouchdown) {
  BaselineController ctl;
  for (auto s : kAllScenarios)
    for (int i = 0; i < 3; ++i) {
      const auto res = run_trial(ctl, WorldConfig{}, s, i, trial_seed(9, s, i), false);
      EXPECT_EQ(res.touchdown_lateral_error.has_value(), res.terminal == Terminal::Touchdown);
      if (res.velocity_correlation) {
        EXPECT_GE(*res.velocity_correlation, -1.0);
        EXPECT_LE(*res.velocity_correlation, 1.0);
      }
    }
}

TEST(Trial, WindOnlyForAgentOnFirstTwoScenarios) {
  EXPECT_TRUE(wind_applies(true, ControllerKind::Agent, ScenarioKind::SPL));
  EXPECT_TRUE(wind_applies(true, ControllerKind::Agent, ScenarioKind::LMPL));
  EXPECT_FALSE(wind_applies(true, ControllerKind::Agent, ScenarioKind::CMPL));
  EXPECT_FALSE(wind_applies(true, ControllerKind::EkfPid, ScenarioKind::SPL));
  EXPECT_FALSE(wind_applies(false, ControllerKind::Agent, ScenarioKind::SPL));
}

TEST(Benchmark, PairedSeedsAcrossControllers) {
  Mlp<float> actor({kObservationSize, 8, kActionSize}, Activation::Tanh);
  BenchmarkOptions opts;
  opts.trials_per_scenario = 2;
  opts.seed = 17;
  const auto agent = run_benchmark([&] { return std::make_unique<AgentController>(actor); }, WorldConfig{}, opts);
  const auto base = run_benchmark([] { return std::make_unique<BaselineController>(); }, WorldConfig{}, opts);
  ASSERT_EQ(agent.trials.size(), 8u);
  ASSERT_EQ(base.trials.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(agent.trials[i].seed, base.trials[i].seed);
    EXPECT_EQ(agent.trials[i].scenario, base.trials[i].scenario);
  }
  EXPECT_NE(agent.trials[0].seed, agent.trials[1].seed);
  EXPECT_EQ(agent.entries.size(), 4u);
}

TEST(Benchmark, ReproducibleAndWorkerCountInvariant) {
  BenchmarkOptions opts;
  opts.trials_per_scenario = 3;
  opts.seed = 4;
  auto make = [] { return std::make_unique<BaselineController>(); };
  const auto a = report_text(run_benchmark(make, WorldConfig{}, opts));
  const auto b = report_text(run_benchmark(make, WorldConfig{}, opts));
  opts.workers = 3;
  const auto c = report_text(run_benchmark(make, WorldConfig{}, opts));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Benchmark, WindTogglePreservesPlatformTrajectories) {
  Mlp<float> actor({kObservationSize, 8, kActionSize}, Activation::Tanh);
  BenchmarkOptions opts;
  opts.scenarios = {ScenarioKind::LMPL};
  opts.trials_per_scenario = 2;
  std::vector<std::vector<TraceRow>> calm, windy;
  opts.trace_sink = [&](const TrialResult&, const std::vector<TraceRow>& t) { calm.push_back(t); };
  run_benchmark([&] { return std::make_unique<AgentController>(actor); }, WorldConfig{}, opts);
  opts.wind = true;
  opts.trace_sink = [&](const TrialResult& r, const std::vector<TraceRow>& t) {
    EXPECT_TRUE(r.wind_enabled);
    windy.push_back(t);
  };
  run_benchmark([&] { return std::make_unique<AgentController>(actor); }, WorldConfig{}, opts);
  ASSERT_EQ(calm.size(), windy.size());
  for (std::size_t i = 0; i < calm.size(); ++i) {
    const std::size_t n = std::min(calm[i].size(), windy[i].size());
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(calm[i][k].pad_position, windy[i][k].pad_position);
  }
}

TEST(Report, CsvRecomputableFromTrials) {
  BenchmarkOptions opts;
  opts.scenarios = {ScenarioKind::SPL};
  opts.trials_per_scenario = 4;
  const auto rep = run_benchmark([] { return std::make_unique<BaselineController>(); }, WorldConfig{}, opts);
  // Recompute the precision mean from the per-trial CSV text at full precision.
  std::ostringstream s;
  write_trials_csv(s, rep.trials);
  std::istringstream in(s.str());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) header.push_back(c);
  }
  const auto col = std::find(header.begin(), header.end(), "lateral_error") - header.begin();
  ASSERT_LT(static_cast<std::size_t>(col), header.size());
  std::vector<double> lat;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (static_cast<std::size_t>(col) < f.size() && !f[static_cast<std::size_t>(col)].empty())
      lat.push_back(std::stod(f[static_cast<std::size_t>(col)]));
  }
  ASSERT_TRUE(rep.entries[0].precision.has_value());
  EXPECT_EQ(summarize(lat)->mean, rep.entries[0].precision->mean);
}
