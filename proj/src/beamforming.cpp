#include "mfris/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mfris {

using sdp::AffineExpr;
using sdp::Relation;

ChannelForms liftChannelForms(const ChannelSet& channels,
                              const RisProfile& profile) {
  ChannelForms f;
  const auto& h = channels.bsToRis;
  for (std::size_t k = 0; k < channels.users(); ++k) {
    const int user = static_cast<int>(k);
    const CRowVec hk = combinedChannel(channels, profile, user);
    f.combined.push_back(hk.adjoint() * hk);
    const Vec& beta = profile.beta(profile.userSide.at(k));
    f.amplify.push_back(h.adjoint() * beta.cast<cd>().asDiagonal() * h);
    f.cascadeGain.push_back(
        (channels.risToUser[k].cwiseAbs2().array() * beta.array()).sum());
    f.betaSum.push_back(beta.sum());
  }
  return f;
}

ChannelForms liftChannelForms(const ChannelSet& channels,
                              const LiftedSurface& surface) {
  ChannelForms f;
  const auto m = channels.elements();
  const auto& h = channels.bsToRis;
  for (std::size_t k = 0; k < channels.users(); ++k) {
    const int user = static_cast<int>(k);
    const CMat& v = surface.forUser(user);
    const CMat c = cascadeStack(channels, user);
    f.combined.push_back(hermitianPart(c.adjoint() * v.conjugate() * c));
    const Vec beta = v.diagonal().head(m).real();
    f.amplify.push_back(h.adjoint() * beta.cast<cd>().asDiagonal() * h);
    f.cascadeGain.push_back(
        (channels.risToUser[k].cwiseAbs2().array() * beta.array()).sum());
    f.betaSum.push_back(beta.sum());
  }
  return f;
}

ScaBound scaRateBound(double aPrev, double bPrev) {
  if (!(aPrev > 0.0) || !(bPrev > 0.0) || !std::isfinite(aPrev) ||
      !std::isfinite(bPrev)) {
    throw std::domain_error("scaRateBound: expansion point must be positive");
  }
  const double ab = aPrev * bPrev;
  ScaBound s;
  s.coeffA = -kLog2e / (aPrev * (1.0 + ab));
  s.coeffB = -kLog2e / (bPrev * (1.0 + ab));
  s.constant = std::log2(1.0 + 1.0 / ab) - s.coeffA * aPrev - s.coeffB * bPrev;
  return s;
}

double SpectralLinearization::upperBound(const CMat& w) const {
  const double lin =
      spectralPrev + (leading.adjoint() * (w - prev) * leading)(0).real();
  return nuclearNorm(w) - lin;
}

SpectralLinearization spectralPenaltyLinearization(const CMat& wPrev) {
  const EigenPair ep = leadingEigenpair(wPrev);
  return {wPrev, ep.vector, std::abs(ep.value)};
}

LiftedTerms liftedTerms(const ChannelForms& forms, const std::vector<CMat>& w,
                        const PowerBudget& budget, const Permutation& order) {
  const std::size_t k = forms.combined.size();
  LiftedTerms t;
  t.signal.assign(k, 0.0);
  t.interference.assign(k, 0.0);
  auto quad = [](const CMat& a, const CMat& x) {
    return a.cwiseProduct(x.transpose()).sum().real();
  };
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const int user = order[rank];
    t.signal[user] = quad(forms.combined[user], w[user]);
    double intf = budget.noiseRis * forms.cascadeGain[user] + budget.noiseUser;
    for (std::size_t j = rank + 1; j < order.size(); ++j) {
      intf += quad(forms.combined[user], w[order[j]]);
    }
    t.interference[user] = intf;
  }
  return t;
}

std::vector<double> liftedRates(const ChannelForms& forms,
                                const std::vector<CMat>& w,
                                const PowerBudget& budget,
                                const Permutation& order) {
  const auto t = liftedTerms(forms, w, budget, order);
  std::vector<double> rates(t.signal.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rates[k] = achievableRate(std::max(t.signal[k], 0.0) / t.interference[k]);
  }
  return rates;
}

void tightenAuxiliaries(const LiftedTerms& terms, Vec& a, Vec& b) {
  const auto k = static_cast<Eigen::Index>(terms.signal.size());
  a.resize(k);
  b.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(terms.signal[i] > 0.0)) {
      throw std::domain_error("tightenAuxiliaries: user " + std::to_string(i) +
                              " receives no signal power");
    }
    a(i) = 1.0 / terms.signal[i];
    b(i) = terms.interference[i];
  }
}

P3Problem buildP3(const ChannelForms& forms, const PowerBudget& budget,
                  const Permutation& order, const BfIterate& prev) {
  const int users = static_cast<int>(forms.combined.size());
  if (users == 0) throw std::invalid_argument("buildP3: no users");
  const int n = static_cast<int>(forms.combined[0].rows());
  if (static_cast<int>(order.size()) != users ||
      static_cast<int>(prev.w.size()) != users || prev.a.size() != users ||
      prev.b.size() != users ||
      static_cast<int>(prev.leadingEigvec.size()) != users) {
    throw std::invalid_argument("buildP3: inconsistent user count");
  }
  for (int k = 0; k < users; ++k) {
    if (forms.combined[k].rows() != n || forms.amplify[k].rows() != n ||
        prev.w[k].rows() != n || prev.leadingEigvec[k].size() != n) {
      throw std::invalid_argument("buildP3: dimension mismatch");
    }
  }

  P3Problem out;
  out.powerUnit = budget.pMaxTransmit > 0.0 ? budget.pMaxTransmit : 1.0;
  out.noiseUnit = budget.noiseUser > 0.0 ? budget.noiseUser : 1.0;
  const double gainScale = out.powerUnit / out.noiseUnit;
  auto& p = out.problem;
  for (int k = 0; k < users; ++k) {
    out.w.push_back(p.addPsdBlock("W" + std::to_string(k), n));
  }
  for (int k = 0; k < users; ++k) {
    out.recip.push_back(p.addPsdBlock("Y" + std::to_string(k), 2, false));
    out.b.push_back(p.addScalar("B" + std::to_string(k), 0.0));
    out.r.push_back(p.addScalar("R" + std::to_string(k), budget.rateMin));
  }

  std::vector<int> rankOf(users);
  for (int rank = 0; rank < users; ++rank) rankOf[order[rank]] = rank;

  AffineExpr transmit;
  AffineExpr amplify;
  bool hasSurface = false;
  double amplifyNoise = 0.0;
  AffineExpr objective;
  for (int k = 0; k < users; ++k) {
    const std::string tag = std::to_string(k);
    p.addConstraint(AffineExpr{}.addEntry(out.recip[k], 0, 1, 1.0, 2),
                    Relation::kEqual, 1.0, "unit off-diagonal " + tag);

    // 1/A_k <= Tr(H_hat_k W_k) through t_k.
    AffineExpr signal = sdp::assembleLifted(gainScale * forms.combined[k], out.w[k]);
    signal.addEntry(out.recip[k], 1, 1, -1.0, 2);
    p.addConstraint(std::move(signal), Relation::kGreaterEqual, 0.0,
                    "signal " + tag);

    AffineExpr intf;
    intf.add(out.b[k], 1.0);
    for (int i = 0; i < users; ++i) {
      if (rankOf[i] > rankOf[k]) {
        intf.addTrace(out.w[i], -gainScale * forms.combined[k]);
      }
    }
    p.addConstraint(std::move(intf), Relation::kGreaterEqual,
                    1.0 + budget.noiseRis * forms.cascadeGain[k] / out.noiseUnit,
                    "interference " + tag);

    const ScaBound sca = scaRateBound(prev.a(k) * out.noiseUnit,
                                      prev.b(k) / out.noiseUnit);
    AffineExpr rate;
    rate.add(out.r[k], 1.0)
        .addEntry(out.recip[k], 0, 0, -sca.coeffA, 2)
        .add(out.b[k], -sca.coeffB);
    p.addConstraint(std::move(rate), Relation::kLessEqual, sca.constant,
                    "rate bound " + tag);

    transmit.addTrace(out.w[k], CMat::Identity(n, n));
    if (forms.amplify[k].cwiseAbs().maxCoeff() > 0.0) hasSurface = true;
    amplify.addTrace(out.w[k], out.powerUnit * forms.amplify[k]);
    amplifyNoise += budget.noiseRis * forms.betaSum[k];

    // sum R_k - (1/eta) Tr((I - e e^H) W_k); the constant part of the
    // linearization cancels because e is the leading eigenvector of W_prev.
    const CVec& e = prev.leadingEigvec[k];
    const CMat proj = CMat::Identity(n, n) - e * e.adjoint();
    objective.add(out.r[k], 1.0);
    objective.addTrace(out.w[k], -(out.powerUnit / prev.penaltyEta) * proj);
  }
  p.addConstraint(std::move(transmit), Relation::kLessEqual,
                  budget.pMaxTransmit / out.powerUnit, "transmit power");
  if (hasSurface || amplifyNoise > 0.0) {
    p.addConstraint(std::move(amplify), Relation::kLessEqual,
                    budget.pAmplify - amplifyNoise, "amplification power");
  }
  p.setObjective(std::move(objective));
  return out;
}

P3Result solveP3(const ChannelForms& forms, const PowerBudget& budget,
                 const Permutation& order, const BfIterate& prev,
                 const sdp::ConicSolver& solver, const sdp::Tolerances& tol,
                 int maxIter) {
  const int users = static_cast<int>(forms.combined.size());
  const auto n = forms.combined.at(0).rows();
  P3Result res;
  res.next = prev;
  if (!(budget.pMaxTransmit > 0.0)) {
    // Only the zero precoder is admissible; it meets the QoS floor only
    // when that floor is zero.
    res.next.w.assign(users, CMat::Zero(n, n));
    res.next.r = Vec::Zero(users);
    res.next.a = Vec::Constant(users, std::numeric_limits<double>::infinity());
    res.solution.status = budget.rateMin > 0.0 ? sdp::SolveStatus::kInfeasible
                                               : sdp::SolveStatus::kOptimal;
    return res;
  }
  const P3Problem p3 = buildP3(forms, budget, order, prev);
  res.solution = solver.solve(p3.problem, tol, maxIter);
  res.objective = res.solution.objectiveValue;
  const auto& s = res.solution;
  if (s.blocks.empty()) return res;
  for (int k = 0; k < users; ++k) {
    res.next.w[k] = hermitianPart(p3.powerUnit * s.blocks[p3.w[k].index]);
    res.next.a(k) = s.blocks[p3.recip[k].index](0, 0).real() / p3.noiseUnit;
    res.next.b(k) = s.scalars[p3.b[k].index] * p3.noiseUnit;
    res.next.r(k) = s.scalars[p3.r[k].index];
    res.next.leadingEigvec[k] = leadingEigenpair(res.next.w[k]).vector;
  }
  return res;
}

BeamformerSet extractBeamformers(const std::vector<CMat>& w, double epsilon) {
  BeamformerSet out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double viol = rankOneViolation(w[k]);
    if (viol > epsilon) {
      throw RankViolationError("extractBeamformers: W_" + std::to_string(k) +
                                   " rank-one violation " + std::to_string(viol),
                               viol);
    }
    const EigenPair ep = leadingEigenpair(w[k]);
    out.precoders.push_back(std::sqrt(std::max(ep.value, 0.0)) * ep.vector);
  }
  return out;
}

void enforcePowerBudgets(const ChannelSet& channels, const RisProfile& profile,
                         const PowerBudget& budget, BeamformerSet& beams) {
  double scale2 = 1.0;
  const double tx = beams.totalPower();
  if (tx > budget.pMaxTransmit && tx > 0.0) {
    scale2 = std::min(scale2, budget.pMaxTransmit / tx);
  }
  const double noisePart = amplificationPower(
      channels, profile, BeamformerSet::zeros(channels.users(), channels.antennas()),
      budget.noiseRis);
  const double signalPart =
      amplificationPower(channels, profile, beams, budget.noiseRis) - noisePart;
  if (noisePart + signalPart > budget.pAmplify && signalPart > 0.0) {
    scale2 = std::min(scale2, std::max(budget.pAmplify - noisePart, 0.0) / signalPart);
  }
  if (scale2 < 1.0) {
    const double s = std::sqrt(scale2);
    for (auto& p : beams.precoders) p *= s;
  }
}

BeamformerSet extractBeamformers(const std::vector<CMat>& w, double epsilon,
                                 const ChannelSet& channels,
                                 const RisProfile& profile,
                                 const PowerBudget& budget) {
  BeamformerSet beams = extractBeamformers(w, epsilon);
  enforcePowerBudgets(channels, profile, budget, beams);
  return beams;
}

std::optional<BeamformerSet> qosBeams(const ChannelSet& channels,
                                      const RisProfile& profile,
                                      const PowerBudget& budget,
                                      const Permutation& order,
                                      const std::vector<CVec>& directions,
                                      double fill) {
  const std::size_t users = order.size();
  const double gammaMin = std::exp2(budget.rateMin) - 1.0;
  std::vector<CRowVec> hHat;
  std::vector<double> noise;
  for (std::size_t k = 0; k < users; ++k) {
    const int user = static_cast<int>(k);
    hHat.push_back(combinedChannel(channels, profile, user));
    const CRowVec cascade = channels.risToUser[k].adjoint() * surfaceMatrix(profile, user);
    noise.push_back(budget.noiseRis * cascade.squaredNorm() + budget.noiseUser);
  }
  std::vector<double> power(users, 0.0);
  for (std::size_t rank = users; rank-- > 0;) {
    const int k = order[rank];
    double intf = noise[k];
    for (std::size_t j = rank + 1; j < users; ++j) {
      const int i = order[j];
      intf += power[i] * std::norm((hHat[k] * directions[i])(0));
    }
    const double gain = std::norm((hHat[k] * directions[k])(0));
    if (gammaMin > 0.0 && !(gain > 0.0)) return std::nullopt;
    power[k] = gammaMin > 0.0 ? gammaMin * intf / gain : 0.0;
  }
  if (gammaMin <= 0.0) power.assign(users, 1.0);
  BeamformerSet beams;
  for (std::size_t k = 0; k < users; ++k) {
    beams.precoders.push_back(std::sqrt(power[k]) * directions[k]);
  }
  const double noisePart = amplificationPower(
      channels, profile, BeamformerSet::zeros(users, channels.antennas()),
      budget.noiseRis);
  const double tx = beams.totalPower();
  const double amp =
      amplificationPower(channels, profile, beams, budget.noiseRis) - noisePart;
  double headroom = tx > 0.0 ? budget.pMaxTransmit / tx
                             : std::numeric_limits<double>::infinity();
  if (amp > 0.0) headroom = std::min(headroom, (budget.pAmplify - noisePart) / amp);
  if (!std::isfinite(headroom)) headroom = 1.0;
  double scale = fill * headroom;
  if (gammaMin > 0.0) {
    if (headroom < 1.0) return std::nullopt;
    scale = std::max(scale, 1.0);
  } else if (!(headroom >= 0.0)) {
    return std::nullopt;
  }
  for (auto& w : beams.precoders) w *= std::sqrt(scale);
  return beams;
}

}  // namespace mfris
