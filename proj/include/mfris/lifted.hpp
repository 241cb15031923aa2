#pragma once

#include <vector>

#include "mfris/system_model.hpp"

namespace mfris {

/// Lifted surface state: V_p = [u_p; 1][u_p; 1]^H for p in {t, r} once rank
/// one. Users on the same side share one matrix.
struct LiftedSurface {
  CMat vT;
  CMat vR;
  std::vector<Side> userSide;

  const CMat& forSide(Side s) const { return s == Side::kTransmission ? vT : vR; }
  CMat& forSide(Side s) { return s == Side::kTransmission ? vT : vR; }
  const CMat& forUser(int k) const { return forSide(userSide.at(k)); }
  Eigen::Index elements() const { return vT.rows() - 1; }

  static LiftedSurface fromProfile(const RisProfile& profile);
};

/// Lifted precoders W_k = w_k w_k^H once rank one.
std::vector<CMat> liftBeamformers(const BeamformerSet& beams);

/// C_k = [diag(conj(g_k)) H; h_k^H], so that h_hat_k = v^T C_k for v = [u; 1].
CMat cascadeStack(const ChannelSet& channels, int user);

}  // namespace mfris
