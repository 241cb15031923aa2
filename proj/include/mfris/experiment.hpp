#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfris/optimizer.hpp"

namespace mfris {

enum class SweepVariable { kPMaxDbm, kElementCount, kRisYCoord };

const char* sweepVariableName(SweepVariable v);
SweepVariable parseSweepVariable(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::kPMaxDbm;
  std::vector<double> values{20.0};  // as written in the config
};

/// Thrown by loadConfig / parseConfig. what() starts with the offending field
/// path, e.g. "sweep.values[2]: ...".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Position3D bs{0.0, 0.0, 0.0};
  Position3D ris{0.0, 50.0, 20.0};
  std::array<Position3D, 2> circleCenters{Position3D{0.0, 45.0, 0.0},
                                          Position3D{0.0, 55.0, 0.0}};
  double radius = 3.0;

  int users = 6;
  int antennas = 16;
  int elements = 100;

  // Linear after load (mW, amplitude ratio).
  PowerBudget budget{dbToLinear(20.0), dbToLinear(10.0), dbToLinear(-80.0),
                     dbToLinear(-80.0), 0.1};
  double betaMax = dbToLinear(22.0);

  PathLossModel pathLoss;
  double kFactorDb = 3.0;
  LosModel los = LosModel::kSteering;

  AlgorithmConfig algorithm;
  SweepSpec sweep;
  /// Linear counterpart of sweep.values (mW for a power sweep).
  std::vector<double> sweepLinear{dbToLinear(20.0)};
  std::vector<ArchitecturePreset> presets = allPresets();
  int trials = 10;
  std::uint64_t seed = 1;
  int workers = 1;
  bool recordWallTime = false;
  /// Reuse one realization per trial at every sweep value (common random
  /// numbers across the sweep) instead of a fresh one per value.
  bool pairAcrossSweep = false;

  /// Throws ConfigError.
  void validate() const;
};

/// JSON text; missing keys keep their defaults and an empty or
/// whitespace-only document yields the default config.
ExperimentConfig parseConfig(const std::string& text);
ExperimentConfig loadConfig(const std::filesystem::path& path);

/// Built-in desk-scale configuration used by the `demo` subcommand.
ExperimentConfig demoConfig();

/// Replaces the sweep values and refreshes their linear counterparts.
void setSweep(ExperimentConfig& config, SweepVariable variable,
              std::vector<double> values);

/// Seed of one (sweep point, trial) realization, shared by all presets.
std::uint64_t trialSeed(std::uint64_t baseSeed, std::size_t sweepIndex, int trial);

struct Scenario {
  NetworkGeometry geometry;
  ChannelSet channels;
  std::vector<Side> sides;
  PowerBudget budget;
  double betaMax = 1.0;
};

/// Seed of run (sweepIndex, trial) under the config's pairing rule.
std::uint64_t runSeed(const ExperimentConfig& config, std::size_t sweepIndex, int trial);

/// Geometry and channels of one sweep point and seed. Users on the first
/// circle are on the reflection side of the surface, the rest transmit.
Scenario buildScenario(const ExperimentConfig& config, std::size_t sweepIndex,
                       std::uint64_t seed);

struct RunRecord {
  double sweepValue = 0.0;
  ArchitecturePreset preset = ArchitecturePreset::kMfRis;
  int trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double sumRate = 0.0;
  bool converged = false;
  bool feasible = false;
  int iterations = 0;
  int solverFailures = 0;
  std::string status;
  double wallMs = 0.0;
  IterationTrace trace;
};

struct CellSummary {
  double sweepValue = 0.0;
  ArchitecturePreset preset = ArchitecturePreset::kMfRis;
  std::vector<double> rates;  // successful trials, in trial order
  int trials = 0;
  int failures = 0;
  int converged = 0;
  double mean = 0.0;    // NaN when every trial failed
  double stderr_ = 0.0; // sample standard error, 0 for a single trial
  double minRate = 0.0;
  double maxRate = 0.0;
  double meanIterations = 0.0;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::kPMaxDbm;
  std::vector<double> values;
  std::vector<ArchitecturePreset> presets;
  int trials = 0;
  std::vector<RunRecord> runs;  // value-major, then trial, then preset
  std::vector<CellSummary> cells;  // value-major, then preset

  const CellSummary& cell(double value, ArchitecturePreset preset) const;
};

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aggregates runs into cells; failed runs are counted and left out of the
/// mean.
std::vector<CellSummary> summarize(const SweepResult& result);

using ProgressFn = std::function<void(const RunRecord&, std::size_t done,
                                      std::size_t total)>;

/// Runs every (value, trial, preset) job. Throws SweepError when every run
/// at some sweep value failed.
SweepResult runSweep(const ExperimentConfig& config, const ProgressFn& progress = {});

std::string formatNumber(double v);
std::string traceToJson(const IterationTrace& trace);
std::string cellName(SweepVariable variable, double value, ArchitecturePreset preset);

/// results.csv, summary.csv, trace/<cell>.json, plotdata/<preset>.dat.
/// Throws std::runtime_error when the directory cannot be written.
void persistResults(const SweepResult& result, const std::filesystem::path& outDir,
                    bool recordWallTime);

}  // namespace mfris
