#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mfris/lifted.hpp"
#include "mfris/sdp_problem.hpp"
#include "mfris/system_model.hpp"

namespace mfris {

/// Quadratic forms of the transmit-side problem for a fixed surface:
/// |h_hat_k w|^2 = Tr(combined_k W), ||Theta_k H w||^2 = Tr(amplify_k W).
struct ChannelForms {
  std::vector<CMat> combined;       // H_hat_k, N x N
  std::vector<CMat> amplify;        // D_k, N x N
  std::vector<double> cascadeGain;  // ||g_k^H Theta_k||^2
  std::vector<double> betaSum;      // sum_m beta_m^{p(k)}
};

ChannelForms liftChannelForms(const ChannelSet& channels,
                              const RisProfile& profile);
/// Same forms for a lifted (possibly higher-rank) surface state.
ChannelForms liftChannelForms(const ChannelSet& channels,
                              const LiftedSurface& surface);

/// First-order lower bound of log2(1 + 1/(A B)) around (aPrev, bPrev):
/// constant + coeffA * A + coeffB * B.
struct ScaBound {
  double constant = 0.0;
  double coeffA = 0.0;
  double coeffB = 0.0;

  double operator()(double a, double b) const {
    return constant + coeffA * a + coeffB * b;
  }
};

/// Throws std::domain_error for a non-positive expansion point.
ScaBound scaRateBound(double aPrev, double bPrev);

/// Affine majorizer of ||W||_* - ||W||_2 around a PSD matrix wPrev.
struct SpectralLinearization {
  CMat prev;
  CVec leading;         // unit leading eigenvector of prev
  double spectralPrev;  // ||prev||_2

  /// ||W||_* - (||prev||_2 + e^H (W - prev) e).
  double upperBound(const CMat& w) const;
};

SpectralLinearization spectralPenaltyLinearization(const CMat& wPrev);

/// State of the transmit-side variables between subproblem solves.
struct BfIterate {
  std::vector<CMat> w;
  Vec a;
  Vec b;
  Vec r;
  std::vector<CVec> leadingEigvec;
  double penaltyEta = 10.0;
};

/// Per-user lifted SINR pieces under a decoding order.
struct LiftedTerms {
  std::vector<double> signal;        // indexed by user
  std::vector<double> interference;  // indexed by user, includes both noises
};

LiftedTerms liftedTerms(const ChannelForms& forms, const std::vector<CMat>& w,
                        const PowerBudget& budget, const Permutation& order);
std::vector<double> liftedRates(const ChannelForms& forms,
                                const std::vector<CMat>& w,
                                const PowerBudget& budget,
                                const Permutation& order);

/// Tight auxiliaries A_k = 1/signal_k, B_k = interference_k + noise.
/// Throws std::domain_error when a user receives zero signal power.
void tightenAuxiliaries(const LiftedTerms& terms, Vec& a, Vec& b);

/// Assembled transmit-side SDP with handles to its variables. Internally the
/// precoders are expressed in units of pMaxTransmit and powers in units of
/// noiseUser.
struct P3Problem {
  sdp::SdpProblem problem;
  std::vector<sdp::BlockId> w;
  std::vector<sdp::BlockId> recip;  // [[A_k, 1], [1, t_k]]
  std::vector<sdp::ScalarId> b;
  std::vector<sdp::ScalarId> r;
  double powerUnit = 1.0;
  double noiseUnit = 1.0;
};

/// Penalized SCA subproblem for fixed surface forms. prev must hold A, B > 0
/// and leading eigenvectors for every user.
P3Problem buildP3(const ChannelForms& forms, const PowerBudget& budget,
                  const Permutation& order, const BfIterate& prev);

struct P3Result {
  sdp::SdpSolution solution;
  BfIterate next;
  /// Sum of R_k minus the linearized penalty, in bit/s/Hz.
  double objective = 0.0;
};

P3Result solveP3(const ChannelForms& forms, const PowerBudget& budget,
                 const Permutation& order, const BfIterate& prev,
                 const sdp::ConicSolver& solver, const sdp::Tolerances& tol,
                 int maxIter = 200);

class RankViolationError : public std::runtime_error {
 public:
  RankViolationError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}
  double violation() const { return violation_; }

 private:
  double violation_;
};

/// w_k = sqrt(lambda_1) e_1 of each W_k. Throws RankViolationError when any
/// ||W_k||_* - ||W_k||_2 exceeds epsilon.
BeamformerSet extractBeamformers(const std::vector<CMat>& w, double epsilon);

/// Extraction followed by a common down-scaling so that the transmit and
/// amplification budgets hold exactly.
BeamformerSet extractBeamformers(const std::vector<CMat>& w, double epsilon,
                                 const ChannelSet& channels,
                                 const RisProfile& profile,
                                 const PowerBudget& budget);

/// Scales all precoders by one factor <= 1 until both power budgets hold.
void enforcePowerBudgets(const ChannelSet& channels, const RisProfile& profile,
                         const PowerBudget& budget, BeamformerSet& beams);

/// Precoders along fixed unit directions (indexed by user) with the least
/// power meeting every rate floor under `order`, then scaled up by one common
/// factor so that `fill` of the tighter budget is used. Empty when the floors
/// cannot be met within both budgets.
std::optional<BeamformerSet> qosBeams(const ChannelSet& channels,
                                      const RisProfile& profile,
                                      const PowerBudget& budget,
                                      const Permutation& order,
                                      const std::vector<CVec>& directions,
                                      double fill = 0.9);

}  // namespace mfris
