#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string output;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(LANDER_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lander_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small networks keep the smoke runs fast; the plumbing is identical.
const std::string kSmallNet = "--set td3.hidden=32,32 --set td3.eval_every=1000 --set td3.eval_episodes=2";

}  // namespace

TEST(Cli, MissingConfigExitsTwoNamingPath) {
  const auto r = run_cli("train --config /no/such/file.cfg");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("/no/such/file.cfg"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("train --total-steps abc").exit_code, 2);
  EXPECT_EQ(run_cli("benchmark").exit_code, 2);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  const auto bad = run_cli("config-dump --set reward.nope=1");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.output.find("reward.nope"), std::string::npos);
}

TEST(Cli, UnknownScenarioListsValidNames) {
  const auto dir = scratch("unknown_scenario");
  const auto r = run_cli("benchmark --baseline --scenario MARS --run-dir " + dir.string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("SPL, LMPL, CMPL, CTL"), std::string::npos) << r.output;
}

TEST(Cli, TrainSmokeIsDeterministic) {
  const auto a = scratch("train_a"), b = scratch("train_b");
  const std::string args = "train --total-steps 5000 --seed 7 --quiet " + kSmallNet;
  const auto ra = run_cli(args + " --out " + a.string());
  ASSERT_EQ(ra.exit_code, 0) << ra.output;
  const auto rb = run_cli(args + " --out " + b.string());
  ASSERT_EQ(rb.exit_code, 0) << rb.output;
  for (const char* f : {"training_curve.csv", "final.ckpt"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  // Resolved configs differ only in the output directory.
  std::string ca = slurp(a / "resolved_config.cfg"), cb = slurp(b / "resolved_config.cfg");
  ca.replace(ca.find(a.string()), a.string().size(), "OUT");
  cb.replace(cb.find(b.string()), b.string().size(), "OUT");
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(count_lines(a / "training_curve.csv"), 6u);

  // Re-running from the emitted resolved config reproduces the outputs.
  const auto c = scratch("train_c");
  const auto rc = run_cli("train --quiet --config " + (a / "resolved_config.cfg").string() + " --out " + c.string());
  ASSERT_EQ(rc.exit_code, 0) << rc.output;
  EXPECT_EQ(slurp(a / "final.ckpt"), slurp(c / "final.ckpt"));
  EXPECT_EQ(slurp(a / "training_curve.csv"), slurp(c / "training_curve.csv"));

  // The checkpoint drives a benchmark; a corrupted copy is refused.
  const auto bench = scratch("bench_agent");
  const auto rbench = run_cli("benchmark --checkpoint " + (a / "final.ckpt").string() +
                              " --scenario SPL --trials 2 --seed 1 --run-dir " + bench.string());
  EXPECT_EQ(rbench.exit_code, 0) << rbench.output;
  std::string bytes = slurp(a / "final.ckpt");
  bytes.resize(bytes.size() - 100);
  std::ofstream(a / "broken.ckpt", std::ios::binary) << bytes;
  const auto rbroken = run_cli("benchmark --checkpoint " + (a / "broken.ckpt").string() +
                               " --scenario SPL --trials 2 --run-dir " + bench.string());
  EXPECT_EQ(rbroken.exit_code, 2);
  EXPECT_NE(rbroken.output.find("payload"), std::string::npos) << rbroken.output;
}

TEST(Cli, BaselineBenchmarkWritesReports) {
  const auto dir = scratch("bench_baseline");
  const auto r = run_cli("benchmark --baseline --scenario SPL --trials 10 --seed 1 --run-dir " + dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* f : {"report.txt", "report.csv", "report.json", "trials.csv", "resolved_config.cfg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(count_lines(dir / "trials.csv"), 11u);
  EXPECT_TRUE(fs::exists(dir / "traces" / "SPL_EkfPid_0.csv"));
  EXPECT_NE(slurp(dir / "report.txt").find("SPL"), std::string::npos);
}

TEST(Cli, AllScenariosPairedRun) {
  const auto ckdir = scratch("pair_ckpt");
  ASSERT_EQ(run_cli("train --total-steps 200 --seed 3 --quiet " + kSmallNet + " --out " + ckdir.string()).exit_code, 0);
  const auto dir = scratch("bench_all");
  const auto r = run_cli("benchmark --baseline --checkpoint " + (ckdir / "final.ckpt").string() +
                         " --scenario ALL --trials 10 --seed 2 --no-traces --run-dir " + dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(dir / "trials.csv"), 1u + 80u);  // 4 scenarios x 10 trials x 2 controllers
  EXPECT_EQ(count_lines(dir / "report.csv"), 1u + 8u);
  EXPECT_FALSE(fs::exists(dir / "traces" / "SPL_EkfPid_0.csv"));
}

TEST(Cli, BenchmarkIsByteIdentical) {
  const auto a = scratch("bench_det_a"), b = scratch("bench_det_b");
  const std::string args = "benchmark --baseline --scenario LMPL,CTL --trials 3 --seed 9 --run-dir ";
  ASSERT_EQ(run_cli(args + a.string()).exit_code, 0);
  ASSERT_EQ(run_cli(args + b.string() + " --workers 2").exit_code, 0);
  for (const char* f : {"report.txt", "report.csv", "report.json", "trials.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "traces" / "CTL_EkfPid_2.csv"), slurp(b / "traces" / "CTL_EkfPid_2.csv"));
}

TEST(Cli, RewardSurfaceGrid) {
  const auto dir = scratch("surface");
  const auto out = dir / "surface.csv";
  const auto r = run_cli("reward-surface --res 101 --range 3 --z 0.5 --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(out), 1u + 10201u);
  EXPECT_EQ(run_cli("reward-surface --res 1 --out " + out.string()).exit_code, 2);
}

TEST(Cli, ReplaySummarizesAndDownsamples) {
  const auto dir = scratch("replay");
  ASSERT_EQ(run_cli("benchmark --baseline --scenario SPL --trials 1 --seed 1 --run-dir " + dir.string()).exit_code, 0);
  const auto trace = dir / "traces" / "SPL_EkfPid_0.csv";
  const auto r = run_cli("replay " + trace.string() + " --downsample 10");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("terminal"), std::string::npos);
  const auto down = dir / "traces" / "SPL_EkfPid_0_downsampled.csv";
  ASSERT_TRUE(fs::exists(down));
  const std::size_t n = count_lines(trace) - 1;
  EXPECT_EQ(count_lines(down) - 1, (n + 9) / 10);

  std::ofstream(dir / "empty.csv").close();
  EXPECT_EQ(run_cli("replay " + (dir / "empty.csv").string()).exit_code, 2);
  std::string bad = slurp(trace);
  bad.replace(bad.find("pad_vx"), 6, "pad_vq");
  std::ofstream(dir / "bad.csv") << bad;
  const auto rb = run_cli("replay " + (dir / "bad.csv").string());
  EXPECT_EQ(rb.exit_code, 2);
  EXPECT_NE(rb.output.find("pad_vq"), std::string::npos) << rb.output;
}

TEST(Cli, ConfigDumpRoundTrip) {
  const auto dir = scratch("dump");
  const auto r = run_cli("config-dump --set reward.alpha=4.25 --set scenario.kind=CTL");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ofstream(dir / "dumped.cfg") << r.output;
  const auto r2 = run_cli("config-dump --config " + (dir / "dumped.cfg").string());
  ASSERT_EQ(r2.exit_code, 0);
  EXPECT_EQ(r.output, r2.output);
  EXPECT_NE(r.output.find("reward.alpha = 4.25"), std::string::npos);
}
