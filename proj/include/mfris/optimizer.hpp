#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfris/beamforming.hpp"
#include "mfris/surface_design.hpp"

namespace mfris {

struct AlgorithmConfig {
  double delta = 1e-6;
  int maxInnerIter = 30;
  double etaInit = 1e4;
  double xiInit = 1e4;
  double mu = 0.5;
  double epsilon = 1e-6;
  int maxOuterIter = 15;
  int randomStartAttempts = 100;
  std::uint64_t seed = 0;
  sdp::Tolerances solverTol{1e-9, 1e-9};
  int solverMaxIter = 200;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

enum class ArchitecturePreset {
  kMfRis,
  kSfRisReflect,
  kSfRisTransmit,
  kActiveRis,
  kStarRis,
  kNoRis,
};

const char* presetName(ArchitecturePreset p);
/// Accepts the names produced by presetName. Throws std::invalid_argument.
ArchitecturePreset parsePreset(const std::string& name);
std::vector<ArchitecturePreset> allPresets();

/// Surface bounds implied by a preset on top of the configured amplitude
/// limit. An inactive side is held at zero.
struct PresetBounds {
  double betaMax = 1.0;
  std::array<bool, 2> active{true, true};  // indexed by Side
  bool surfaceOff = false;

  SurfaceActivity activity() const { return {active, betaMax}; }
};

PresetBounds applyPreset(ArchitecturePreset preset, double configuredBetaMax);

struct InnerRecord {
  int outer = 0;
  int inner = 0;
  double sumRate = 0.0;        // lifted sum rate at the iterate
  double objective = 0.0;      // sum rate minus both penalties
  double penaltyW = 0.0;       // sum_k (||W_k||_* - ||W_k||_2) / eta
  double penaltyV = 0.0;       // sum_k (||V_k||_* - ||V_k||_2) / xi
  double rankViolationW = 0.0; // max_k ||W_k||_* - ||W_k||_2
  double rankViolationV = 0.0;
  double residual = 0.0;       // largest solver primal residual of the pair
  double wallMs = 0.0;
};

struct OuterRecord {
  double eta = 0.0;
  double xi = 0.0;
  int innerIterations = 0;
  bool reordered = false;
};

struct IterationTrace {
  std::vector<InnerRecord> inner;
  std::vector<OuterRecord> outer;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InitialPoint {
  BeamformerSet beams;
  RisProfile profile;
  Vec a;
  Vec b;
  int attempts = 0;
};

/// Random starts until one satisfies all constraints. A and B are tight at
/// the returned point. Throws InitializationError when every attempt fails.
InitialPoint initializeFeasible(const ChannelSet& channels,
                                const PowerBudget& budget, double betaMax,
                                const std::vector<Side>& userSide,
                                ArchitecturePreset preset,
                                const AlgorithmConfig& config);

struct AlgorithmResult {
  BeamformerSet beams;
  RisProfile profile;
  IterationTrace trace;
  double sumRate = 0.0;
  bool converged = false;   // both rank thresholds met
  bool feasible = false;    // final point passes checkFeasibility
  int iterations = 0;       // total inner iterations
  int solverFailures = 0;   // subproblem solves that kept the old block
  std::string lastFailure;
  std::string status;       // "converged", "max_outer", "solver_failure", ...
};

/// Penalty-based alternating optimization over precoders and surface.
/// Throws InitializationError when no feasible start is found.
AlgorithmResult runAlgorithm1(const ChannelSet& channels,
                              const PowerBudget& budget, double betaMax,
                              const std::vector<Side>& userSide,
                              ArchitecturePreset preset,
                              const AlgorithmConfig& config);

}  // namespace mfris
