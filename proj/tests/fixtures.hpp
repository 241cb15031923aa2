#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mfris/channel_model.hpp"
#include "mfris/system_model.hpp"

namespace fixtures {

using namespace mfris;

inline cd drawCn(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  return {n(rng), n(rng)};
}

inline CVec randomCVec(Eigen::Index n, Rng& rng, double scale = 1.0) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * drawCn(rng);
  return v;
}

inline CMat randomCMat(Eigen::Index r, Eigen::Index c, Rng& rng,
                       double scale = 1.0) {
  CMat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * drawCn(rng);
  return m;
}

inline CMat randomPsd(Eigen::Index n, Eigen::Index rank, Rng& rng) {
  const CMat f = randomCMat(n, rank, rng);
  return f * f.adjoint();
}

/// i.i.d. channels with the given per-link amplitude scales.
inline ChannelSet randomChannels(int users, int antennas, int elements,
                                 Rng& rng, double direct = 1.0,
                                 double cascade = 1.0) {
  ChannelSet c;
  c.bsToRis = randomCMat(elements, antennas, rng, cascade);
  for (int k = 0; k < users; ++k) {
    c.direct.push_back(randomCVec(antennas, rng, direct));
    c.risToUser.push_back(randomCVec(elements, rng, 1.0));
  }
  return c;
}

inline std::vector<Side> alternatingSides(int users) {
  std::vector<Side> s;
  for (int k = 0; k < users; ++k) {
    s.push_back(k % 2 == 0 ? Side::kReflection : Side::kTransmission);
  }
  return s;
}

/// Random profile obeying amplitude and energy limits.
inline RisProfile randomProfile(int elements, std::vector<Side> sides,
                                double betaMax, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RisProfile p = RisProfile::dark(elements, std::move(sides), betaMax);
  for (int m = 0; m < elements; ++m) {
    const double total = betaMax * u(rng);
    const double split = u(rng);
    p.betaT(m) = total * split;
    p.betaR(m) = total - p.betaT(m);
    p.thetaT(m) = 2.0 * kPi * u(rng);
    p.thetaR(m) = 2.0 * kPi * u(rng);
  }
  return p;
}

/// Users on two circles around the surface, default geometry.
struct DeskInstance {
  NetworkGeometry geometry;
  ChannelSet channels;
  std::vector<Side> sides;
};

inline DeskInstance deskInstance(std::uint64_t seed, int users, int antennas,
                                 int elements) {
  DeskInstance d;
  const std::array<Position3D, 2> centers{Position3D{0, 45, 0},
                                          Position3D{0, 55, 0}};
  d.geometry = placeUsers(centers, 3.0, {(users + 1) / 2, users / 2}, seed);
  d.geometry.bs = {0, 0, 0};
  d.geometry.ris = {0, 50, 20};
  RicianConfig rician;
  rician.seed = seed;
  d.channels = generateChannels(d.geometry, PathLossModel{}, rician, antennas,
                                elements);
  for (int c : d.geometry.userCircle) {
    d.sides.push_back(c == 0 ? Side::kReflection : Side::kTransmission);
  }
  return d;
}

}  // namespace fixtures
