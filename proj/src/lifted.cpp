#include "mfris/lifted.hpp"

namespace mfris {

LiftedSurface LiftedSurface::fromProfile(const RisProfile& profile) {
  LiftedSurface s;
  s.userSide = profile.userSide;
  const auto m = profile.elements();
  for (Side side : {Side::kTransmission, Side::kReflection}) {
    CVec v(m + 1);
    v.head(m) = profile.coefficients(side);
    v(m) = 1.0;
    s.forSide(side) = v * v.adjoint();
  }
  return s;
}

std::vector<CMat> liftBeamformers(const BeamformerSet& beams) {
  std::vector<CMat> out;
  out.reserve(beams.precoders.size());
  for (const auto& w : beams.precoders) out.push_back(w * w.adjoint());
  return out;
}

CMat cascadeStack(const ChannelSet& channels, int user) {
  const auto m = channels.elements();
  const auto n = channels.antennas();
  CMat c(m + 1, n);
  c.topRows(m) = channels.risToUser.at(user).conjugate().asDiagonal() *
                 channels.bsToRis;
  c.bottomRows(1) = channels.direct.at(user).adjoint();
  return c;
}

}  // namespace mfris
