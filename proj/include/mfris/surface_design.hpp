#pragma once

#include <array>
#include <vector>

#include "mfris/beamforming.hpp"
#include "mfris/lifted.hpp"
#include "mfris/sdp_problem.hpp"

namespace mfris {

/// Constant (M+1) x (M+1) matrices of the surface-side problem for fixed
/// precoders. For V = [u; 1][u; 1]^H of the user's side:
///   Tr(V coupling[k][i]) = |h_hat_k w_i|^2
///   Tr(V cascadeNoise[k]) = ||g_k^H Theta_k||^2
///   Tr(V amplify[k]) = ||Theta_k H w_k||^2 + noiseRis * sum_m beta_m
///   Tr(V gain[k]) = ||h_hat_k||^2
struct LiftedRisData {
  std::vector<std::vector<CMat>> coupling;
  std::vector<CMat> cascadeNoise;
  std::vector<CMat> amplify;
  std::vector<CMat> gain;

  const CMat& signal(int k) const { return coupling.at(k).at(k); }
};

LiftedRisData liftRisForms(const ChannelSet& channels, const BeamformerSet& beams,
                           double noiseRis);
/// Same forms for lifted (possibly higher-rank) precoders.
LiftedRisData liftRisForms(const ChannelSet& channels,
                           const std::vector<CMat>& w, double noiseRis);

/// Which surface sides are optimization variables. A side that is not active
/// stays at its value in the previous iterate.
struct SurfaceActivity {
  std::array<bool, 2> active{true, true};  // indexed by Side
  double betaMax = 1.0;

  bool isActive(Side s) const { return active[static_cast<int>(s)]; }
};

struct RisIterate {
  LiftedSurface v;
  Vec a;
  Vec b;
  Vec r;
  std::array<CVec, 2> leadingEigvec;  // indexed by Side
  double penaltyXi = 10.0;
};

/// Leading eigenvectors of both sides of a lifted surface.
std::array<CVec, 2> surfaceLeadingEigvecs(const LiftedSurface& v);

struct P5Problem {
  sdp::SdpProblem problem;
  std::array<sdp::BlockId, 2> v{};  // index -1 when the side is fixed
  std::vector<sdp::BlockId> recip;
  std::vector<sdp::ScalarId> b;
  std::vector<sdp::ScalarId> r;
  double noiseUnit = 1.0;
};

/// Penalized SCA subproblem over the surface for fixed precoders. prev must
/// hold A, B > 0 consistent with `data` and its surface.
P5Problem buildP5(const LiftedRisData& data, const PowerBudget& budget,
                  const Permutation& order, const RisIterate& prev,
                  const SurfaceActivity& activity);

struct P5Result {
  sdp::SdpSolution solution;
  RisIterate next;
  double objective = 0.0;
};

P5Result solveP5(const LiftedRisData& data, const PowerBudget& budget,
                 const Permutation& order, const RisIterate& prev,
                 const SurfaceActivity& activity, const sdp::ConicSolver& solver,
                 const sdp::Tolerances& tol, int maxIter = 200);

/// Amplitudes and phases from the leading eigenvector of each active side,
/// phase-normalized so that the last entry is real positive. Amplitudes are
/// clipped to the bounds and scaled to restore energy conservation. Inactive
/// sides are dark. Throws RankViolationError when an active side violates
/// the rank-one threshold, std::domain_error when the last eigenvector entry
/// is numerically zero.
RisProfile extractRisProfile(const LiftedSurface& v, double epsilon,
                             const SurfaceActivity& activity);

}  // namespace mfris
