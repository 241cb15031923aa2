// mfris: run surface-aided NOMA sweeps from a JSON config.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mfris/experiment.hpp"

using namespace mfris;

namespace {

struct Overrides {
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> jobs;
  std::vector<std::string> presets;
  bool recordWallTime = false;
};

void addOverrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials per point")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--preset", o.presets, "comma separated preset list")->delimiter(',');
  cmd->add_flag("--wall-time", o.recordWallTime, "write wall_ms to results.csv");
}

void apply(const Overrides& o, ExperimentConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (o.jobs) c.workers = *o.jobs;
  if (!o.presets.empty()) {
    c.presets.clear();
    for (const auto& p : o.presets) c.presets.push_back(parsePreset(p));
  }
  c.recordWallTime = c.recordWallTime || o.recordWallTime;
  c.validate();
}

int execute(ExperimentConfig c, const Overrides& o) {
  apply(o, c);
  std::cerr << "sweep " << sweepVariableName(c.sweep.variable) << " over "
            << c.sweep.values.size() << " values, " << c.presets.size() << " presets, "
            << c.trials << " trials (K=" << c.users << " N=" << c.antennas
            << " M=" << c.elements << ")\n";
  const char* var = sweepVariableName(c.sweep.variable);
  auto progress = [var](const RunRecord& r, std::size_t done, std::size_t total) {
    std::fprintf(stderr, "[%zu/%zu] %s=%s %s trial %d: ", done, total, var,
                 formatNumber(r.sweepValue).c_str(), presetName(r.preset), r.trial);
    if (r.failed) {
      std::fprintf(stderr, "FAILED (%s)\n", r.error.c_str());
    } else {
      std::fprintf(stderr, "%.4f bit/s/Hz, %s, %d iters, %.0f ms\n", r.sumRate,
                   r.status.c_str(), r.iterations, r.wallMs);
    }
  };
  const auto result = runSweep(c, progress);
  persistResults(result, o.out, c.recordWallTime);
  for (const auto& cell : result.cells) {
    std::fprintf(stderr, "%-16s %10s  mean %.4f  stderr %.4f  failures %d\n",
                 presetName(cell.preset), formatNumber(cell.sweepValue).c_str(), cell.mean,
                 cell.stderr_, cell.failures);
  }
  std::cerr << "wrote " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MF-RIS NOMA sweep runner"};
  app.require_subcommand(1);

  Overrides runOpts, demoOpts;
  std::string runPath, validatePath;

  auto* run = app.add_subcommand("run", "run the sweep described by a config file");
  run->add_option("config", runPath, "JSON config")->required()->check(CLI::ExistingFile);
  addOverrides(run, runOpts);

  auto* validate = app.add_subcommand("validate", "parse and check a config file");
  validate->add_option("config", validatePath, "JSON config")->required();

  auto* demo = app.add_subcommand("demo", "desk-scale power sweep (K=4, N=4, M=8)");
  addOverrides(demo, demoOpts);
  demoOpts.out = "demo_out";

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(loadConfig(runPath), runOpts);
    if (*demo) return execute(demoConfig(), demoOpts);
    if (*validate) {
      const auto c = loadConfig(validatePath);
      std::cout << "ok: " << sweepVariableName(c.sweep.variable) << " x "
                << c.sweep.values.size() << ", " << c.presets.size() << " presets, "
                << c.trials << " trials, K=" << c.users << " N=" << c.antennas
                << " M=" << c.elements << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
