#include "mfris/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mfris {

CVec RisProfile::coefficients(Side s) const {
  const Vec& b = beta(s);
  const Vec& t = theta(s);
  CVec u(b.size());
  for (Eigen::Index m = 0; m < b.size(); ++m) {
    u(m) = std::polar(std::sqrt(std::max(b(m), 0.0)), t(m));
  }
  return u;
}

RisProfile RisProfile::dark(Eigen::Index elements, std::vector<Side> sides,
                            double betaMax) {
  RisProfile p;
  p.betaT = Vec::Zero(elements);
  p.betaR = Vec::Zero(elements);
  p.thetaT = Vec::Zero(elements);
  p.thetaR = Vec::Zero(elements);
  p.betaMax = betaMax;
  p.userSide = std::move(sides);
  return p;
}

namespace {

double wrapPhase(double angle) {
  double a = std::fmod(angle, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

}  // namespace

RisProfile RisProfile::fromCoefficients(const CVec& uT, const CVec& uR,
                                        std::vector<Side> sides,
                                        double betaMax) {
  RisProfile p = dark(uT.size(), std::move(sides), betaMax);
  for (Eigen::Index m = 0; m < uT.size(); ++m) {
    p.betaT(m) = std::norm(uT(m));
    p.betaR(m) = std::norm(uR(m));
    p.thetaT(m) = wrapPhase(std::arg(uT(m)));
    p.thetaR(m) = wrapPhase(std::arg(uR(m)));
  }
  return p;
}

void RisProfile::validate(double tol) const {
  const auto m = betaT.size();
  if (betaR.size() != m || thetaT.size() != m || thetaR.size() != m) {
    throw std::invalid_argument("RisProfile: inconsistent lengths");
  }
  if (!(betaMax >= 0.0)) throw std::invalid_argument("RisProfile: betaMax < 0");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (betaT(i) < -tol || betaR(i) < -tol || betaT(i) > betaMax + tol ||
        betaR(i) > betaMax + tol) {
      throw std::invalid_argument("RisProfile: amplitude outside [0, betaMax]");
    }
    if (betaT(i) + betaR(i) > betaMax + tol) {
      throw std::invalid_argument("RisProfile: energy conservation violated");
    }
    for (double t : {thetaT(i), thetaR(i)}) {
      if (!(t >= 0.0 && t < 2.0 * kPi)) {
        throw std::invalid_argument("RisProfile: phase outside [0, 2pi)");
      }
    }
  }
}

double BeamformerSet::totalPower() const {
  double p = 0.0;
  for (const auto& w : precoders) p += w.squaredNorm();
  return p;
}

BeamformerSet BeamformerSet::zeros(std::size_t users, Eigen::Index antennas) {
  BeamformerSet b;
  b.precoders.assign(users, CVec::Zero(antennas));
  return b;
}

CMat surfaceMatrix(const RisProfile& profile, int user) {
  return profile.coefficients(profile.userSide.at(user)).asDiagonal();
}

namespace {

// g_k^H Theta_k as a row vector of length M.
CRowVec cascadeRow(const ChannelSet& channels, const RisProfile& profile,
                   int user) {
  const CVec u = profile.coefficients(profile.userSide.at(user));
  return channels.risToUser.at(user).conjugate().cwiseProduct(u).transpose();
}

}  // namespace

CRowVec combinedChannel(const ChannelSet& channels, const RisProfile& profile,
                        int user) {
  return channels.direct.at(user).adjoint() +
         cascadeRow(channels, profile, user) * channels.bsToRis;
}

double sinr(const ChannelSet& channels, const RisProfile& profile,
            const BeamformerSet& beams, const PowerBudget& budget, int rank,
            const Permutation& order) {
  const int k = order.at(rank);
  const CRowVec h = combinedChannel(channels, profile, k);
  const double signal = std::norm((h * beams.precoders.at(k))(0));
  double interference = 0.0;
  for (std::size_t i = rank + 1; i < order.size(); ++i) {
    interference += std::norm((h * beams.precoders.at(order[i]))(0));
  }
  const double risNoise =
      budget.noiseRis * cascadeRow(channels, profile, k).squaredNorm();
  return signal / (interference + risNoise + budget.noiseUser);
}

double achievableRate(double gamma) { return std::log2(1.0 + gamma); }

Permutation decodingOrder(const ChannelSet& channels,
                          const RisProfile& profile) {
  const int k = static_cast<int>(channels.users());
  std::vector<double> gain(k);
  for (int i = 0; i < k; ++i) {
    gain[i] = combinedChannel(channels, profile, i).squaredNorm();
  }
  Permutation order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gain[a] < gain[b]; });
  return order;
}

double amplificationPower(const ChannelSet& channels, const RisProfile& profile,
                          const BeamformerSet& beams, double noiseRis) {
  double total = 0.0;
  for (std::size_t k = 0; k < channels.users(); ++k) {
    const Side side = profile.userSide.at(k);
    const Vec& beta = profile.beta(side);
    const CVec incident = channels.bsToRis * beams.precoders.at(k);
    total += (beta.array() * incident.cwiseAbs2().array()).sum() +
             noiseRis * beta.sum();
  }
  return total;
}

std::vector<double> userRates(const ChannelSet& channels,
                              const RisProfile& profile,
                              const BeamformerSet& beams,
                              const PowerBudget& budget,
                              const Permutation& order) {
  std::vector<double> rates(channels.users(), 0.0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    rates[order[r]] = achievableRate(
        sinr(channels, profile, beams, budget, static_cast<int>(r), order));
  }
  return rates;
}

double sumRate(const ChannelSet& channels, const RisProfile& profile,
               const BeamformerSet& beams, const PowerBudget& budget,
               const Permutation& order) {
  const auto rates = userRates(channels, profile, beams, budget, order);
  return std::accumulate(rates.begin(), rates.end(), 0.0);
}

double sumRate(const ChannelSet& channels, const RisProfile& profile,
               const BeamformerSet& beams, const PowerBudget& budget) {
  return sumRate(channels, profile, beams, budget,
                 decodingOrder(channels, profile));
}

double FeasibilityReport::worstSlack() const {
  double w = std::min({transmitSlack, amplifySlack, amplitudeSlack, orderSlack});
  for (double q : qosSlack) w = std::min(w, q);
  return w;
}

FeasibilityReport checkFeasibility(const ChannelSet& channels,
                                   const RisProfile& profile,
                                   const BeamformerSet& beams,
                                   const PowerBudget& budget,
                                   std::optional<Permutation> order,
                                   double tol) {
  FeasibilityReport rep;
  rep.order = order ? *order : decodingOrder(channels, profile);
  rep.transmitSlack = budget.pMaxTransmit - beams.totalPower();
  rep.amplifySlack = budget.pAmplify - amplificationPower(channels, profile,
                                                          beams, budget.noiseRis);
  double amp = profile.betaMax;
  for (Eigen::Index m = 0; m < profile.elements(); ++m) {
    const double bt = profile.betaT(m);
    const double br = profile.betaR(m);
    amp = std::min({amp, bt, br, profile.betaMax - bt, profile.betaMax - br,
                    profile.betaMax - bt - br});
  }
  rep.amplitudeSlack = amp;
  const auto rates = userRates(channels, profile, beams, budget, rep.order);
  for (double r : rates) rep.qosSlack.push_back(r - budget.rateMin);

  std::vector<double> gain;
  for (int k : rep.order) {
    gain.push_back(combinedChannel(channels, profile, k).squaredNorm());
  }
  const double scale = gain.empty() ? 1.0 : std::max(
      *std::max_element(gain.begin(), gain.end()), 1e-300);
  rep.orderSlack = gain.size() < 2 ? 0.0 : std::numeric_limits<double>::max();
  for (std::size_t i = 0; i + 1 < gain.size(); ++i) {
    rep.orderSlack = std::min(rep.orderSlack, (gain[i + 1] - gain[i]) / scale);
  }
  rep.feasible = rep.worstSlack() >= -tol;
  return rep;
}

}  // namespace mfris
