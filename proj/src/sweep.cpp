#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "mfris/experiment.hpp"

namespace mfris {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RunRecord runOne(const ExperimentConfig& config, std::size_t valueIndex, int trial,
                 ArchitecturePreset preset) {
  RunRecord rec;
  rec.sweepValue = config.sweep.values[valueIndex];
  rec.preset = preset;
  rec.trial = trial;
  rec.seed = runSeed(config, valueIndex, trial);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Scenario sc = buildScenario(config, valueIndex, rec.seed);
    AlgorithmConfig alg = config.algorithm;
    alg.seed = rec.seed;
    auto res = runAlgorithm1(sc.channels, sc.budget, sc.betaMax, sc.sides, preset, alg);
    rec.sumRate = res.sumRate;
    rec.converged = res.converged;
    rec.feasible = res.feasible;
    rec.iterations = res.iterations;
    rec.solverFailures = res.solverFailures;
    rec.status = res.status;
    rec.trace = std::move(res.trace);
  } catch (const InitializationError& e) {
    rec.failed = true;
    rec.status = "no_feasible_start";
    rec.error = e.what();
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.status = "error";
    rec.error = e.what();
  }
  rec.wallMs = std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

std::uint64_t trialSeed(std::uint64_t baseSeed, std::size_t sweepIndex, int trial) {
  std::uint64_t h = splitmix(baseSeed);
  h = splitmix(h ^ static_cast<std::uint64_t>(sweepIndex));
  h = splitmix(h ^ static_cast<std::uint64_t>(trial));
  return h;
}

std::uint64_t runSeed(const ExperimentConfig& config, std::size_t sweepIndex, int trial) {
  return trialSeed(config.seed, config.pairAcrossSweep ? 0 : sweepIndex, trial);
}

Scenario buildScenario(const ExperimentConfig& config, std::size_t sweepIndex,
                       std::uint64_t seed) {
  Scenario s;
  s.budget = config.budget;
  s.betaMax = config.betaMax;
  Position3D ris = config.ris;
  int elements = config.elements;
  const double v = config.sweepLinear.at(sweepIndex);
  switch (config.sweep.variable) {
    case SweepVariable::kPMaxDbm:
      s.budget.pMaxTransmit = v;
      break;
    case SweepVariable::kElementCount:
      elements = static_cast<int>(v);
      break;
    case SweepVariable::kRisYCoord:
      ris.y = v;  // height stays as configured
      break;
  }
  s.geometry = placeUsers(config.circleCenters, config.radius,
                          {(config.users + 1) / 2, config.users / 2}, seed);
  s.geometry.bs = config.bs;
  s.geometry.ris = ris;
  RicianConfig rician;
  rician.kFactorDb = config.kFactorDb;
  rician.los = config.los;
  rician.seed = splitmix(seed ^ 0x6368616eULL);
  s.channels = generateChannels(s.geometry, config.pathLoss, rician, config.antennas,
                                elements);
  for (int c : s.geometry.userCircle) {
    s.sides.push_back(c == 0 ? Side::kReflection : Side::kTransmission);
  }
  return s;
}

const CellSummary& SweepResult::cell(double value, ArchitecturePreset preset) const {
  for (const auto& c : cells) {
    if (c.sweepValue == value && c.preset == preset) return c;
  }
  throw std::out_of_range("no such sweep cell");
}

std::vector<CellSummary> summarize(const SweepResult& result) {
  std::vector<CellSummary> cells;
  for (double value : result.values) {
    for (auto preset : result.presets) {
      CellSummary c;
      c.sweepValue = value;
      c.preset = preset;
      double iters = 0.0;
      for (const auto& r : result.runs) {
        if (r.sweepValue != value || r.preset != preset) continue;
        ++c.trials;
        if (r.failed) {
          ++c.failures;
          continue;
        }
        c.rates.push_back(r.sumRate);
        c.converged += r.converged ? 1 : 0;
        iters += r.iterations;
      }
      const auto n = static_cast<double>(c.rates.size());
      if (c.rates.empty()) {
        c.mean = c.minRate = c.maxRate = std::numeric_limits<double>::quiet_NaN();
        c.stderr_ = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double r : c.rates) sum += r;
        c.mean = sum / n;
        double ss = 0.0;
        for (double r : c.rates) ss += (r - c.mean) * (r - c.mean);
        c.stderr_ = c.rates.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        c.minRate = *std::min_element(c.rates.begin(), c.rates.end());
        c.maxRate = *std::max_element(c.rates.begin(), c.rates.end());
        c.meanIterations = iters / n;
      }
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

SweepResult runSweep(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  SweepResult out;
  out.variable = config.sweep.variable;
  out.values = config.sweep.values;
  out.presets = config.presets;
  out.trials = config.trials;

  struct Job {
    std::size_t value;
    int trial;
    ArchitecturePreset preset;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < config.sweep.values.size(); ++v) {
    for (int t = 0; t < config.trials; ++t) {
      for (auto p : config.presets) jobs.push_back({v, t, p});
    }
  }
  out.runs.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      RunRecord rec = runOne(config, jobs[j].value, jobs[j].trial, jobs[j].preset);
      std::lock_guard<std::mutex> lock(mu);
      out.runs[j] = std::move(rec);
      ++done;
      if (progress) progress(out.runs[j], done, jobs.size());
    }
  };
  const int n = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (double value : out.values) {
    bool any = false;
    for (const auto& r : out.runs) any = any || (r.sweepValue == value && !r.failed);
    if (!any) {
      throw SweepError("every run failed at " + std::string(sweepVariableName(out.variable)) +
                       " = " + formatNumber(value));
    }
  }
  out.cells = summarize(out);
  return out;
}

}  // namespace mfris
