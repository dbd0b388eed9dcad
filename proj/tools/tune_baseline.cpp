// Grid search of the baseline PID gains on the static-pad scenario. The
// shipped defaults were picked with this tool and then frozen.
//
//   tune_baseline [trials] [seed]

#include <iostream>
#include <memory>
#include <string>

#include "lander/lander.hpp"

using namespace lander;

int main(int argc, char** argv) {
  const int trials = argc > 1 ? std::stoi(argv[1]) : 20;
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;

  WorldConfig world;
  std::cout << "kp_xy,kp_z,kd,ki,success_rate,precision_mean,precision_std,mean_duration\n";
  for (double kp_xy : {0.6, 0.9, 1.2, 1.6})
    for (double kp_z : {0.6, 1.0, 1.4})
      for (double kd : {0.0, 0.15, 0.3})
        for (double ki : {0.0, 0.05}) {
          BaselineConfig cfg;
          cfg.kp = Vec3(kp_xy, kp_xy, kp_z);
          cfg.kd = Vec3::Constant(kd);
          cfg.ki = Vec3::Constant(ki);
          BenchmarkOptions opts;
          opts.scenarios = {ScenarioKind::SPL};
          opts.trials_per_scenario = trials;
          opts.seed = seed;
          const auto report = run_benchmark([cfg] { return std::make_unique<BaselineController>(cfg); }, world, opts);
          const auto& e = report.entries.front();
          double duration = 0.0;
          for (const auto& t : report.trials) duration += t.duration;
          std::cout << kp_xy << "," << kp_z << "," << kd << "," << ki << "," << e.success_rate << ","
                    << (e.precision ? e.precision->mean : -1.0) << "," << (e.precision ? e.precision->std : -1.0)
                    << "," << duration / trials << "\n";
        }
  return 0;
}
