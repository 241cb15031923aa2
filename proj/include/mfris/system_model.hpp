#pragma once

#include <optional>
#include <vector>

#include "mfris/channel_model.hpp"
#include "mfris/linalg.hpp"

namespace mfris {

/// Which half-space a user occupies relative to the surface.
enum class Side { kTransmission = 0, kReflection = 1 };

/// Per-element amplitude gains and phases for both half-spaces.
struct RisProfile {
  Vec betaT;
  Vec betaR;
  Vec thetaT;
  Vec thetaR;
  double betaMax = 1.0;
  std::vector<Side> userSide;

  Eigen::Index elements() const { return betaT.size(); }
  const Vec& beta(Side s) const { return s == Side::kTransmission ? betaT : betaR; }
  const Vec& theta(Side s) const { return s == Side::kTransmission ? thetaT : thetaR; }

  /// u_p = sqrt(beta) .* exp(j theta) for side p.
  CVec coefficients(Side s) const;

  /// All amplitudes zero (no surface).
  static RisProfile dark(Eigen::Index elements, std::vector<Side> sides,
                         double betaMax = 1.0);
  /// Profile with side coefficients u_t, u_r given directly.
  static RisProfile fromCoefficients(const CVec& uT, const CVec& uR,
                                     std::vector<Side> sides, double betaMax);

  /// Throws std::invalid_argument when amplitude bounds or energy
  /// conservation are violated by more than tol.
  void validate(double tol = 1e-9) const;
};

struct BeamformerSet {
  std::vector<CVec> precoders;

  double totalPower() const;
  static BeamformerSet zeros(std::size_t users, Eigen::Index antennas);
};

/// All quantities linear: mW and bit/s/Hz.
struct PowerBudget {
  double pMaxTransmit = 100.0;
  double pAmplify = 10.0;
  double noiseRis = 1e-8;
  double noiseUser = 1e-8;
  double rateMin = 0.1;
};

/// Decoding order: order[rank] is the user decoded at that rank, ranks
/// ascending in combined channel gain.
using Permutation = std::vector<int>;

/// diag(sqrt(beta_m^p) exp(j theta_m^p)) with p = userSide[user].
CMat surfaceMatrix(const RisProfile& profile, int user);

/// h_k^H + g_k^H Theta_k H.
CRowVec combinedChannel(const ChannelSet& channels, const RisProfile& profile,
                        int user);

/// SINR of the user decoded at position `rank` of `order`. Interference comes
/// from users decoded after it; the surface noise enters through its expected
/// power noiseRis * ||g_k^H Theta_k||^2.
double sinr(const ChannelSet& channels, const RisProfile& profile,
            const BeamformerSet& beams, const PowerBudget& budget, int rank,
            const Permutation& order);

double achievableRate(double gamma);

/// Users sorted by ascending ||h_hat_k||^2, ties by lower index.
Permutation decodingOrder(const ChannelSet& channels, const RisProfile& profile);

/// Sum over users of ||Theta_k H w_k||^2 + noiseRis * sum_m beta_m^{p(k)}.
double amplificationPower(const ChannelSet& channels, const RisProfile& profile,
                          const BeamformerSet& beams, double noiseRis);

/// Per-user rates indexed by user, evaluated under `order`.
std::vector<double> userRates(const ChannelSet& channels,
                              const RisProfile& profile,
                              const BeamformerSet& beams,
                              const PowerBudget& budget,
                              const Permutation& order);

double sumRate(const ChannelSet& channels, const RisProfile& profile,
               const BeamformerSet& beams, const PowerBudget& budget);
double sumRate(const ChannelSet& channels, const RisProfile& profile,
               const BeamformerSet& beams, const PowerBudget& budget,
               const Permutation& order);

struct FeasibilityReport {
  double transmitSlack = 0.0;      // P_max - sum ||w_k||^2
  double amplifySlack = 0.0;       // P_o - amplification power
  double amplitudeSlack = 0.0;     // min over m of all amplitude bounds
  std::vector<double> qosSlack;    // R_k - R_min, indexed by user
  double orderSlack = 0.0;         // min relative gain gap along the order
  Permutation order;
  bool feasible = false;

  double worstSlack() const;
};

/// Constraint slacks; feasible iff every slack >= -tol. The ordering slack is
/// the smallest consecutive gain gap divided by the largest gain. When no
/// order is supplied the channel-gain order is used.
FeasibilityReport checkFeasibility(const ChannelSet& channels,
                                   const RisProfile& profile,
                                   const BeamformerSet& beams,
                                   const PowerBudget& budget,
                                   std::optional<Permutation> order = {},
                                   double tol = 1e-6);

}  // namespace mfris
