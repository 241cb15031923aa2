#include "mfris/surface_design.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfris {

using sdp::AffineExpr;
using sdp::Relation;

namespace {

CMat borderedDiagonal(const Vec& d) {
  CMat out = CMat::Zero(d.size() + 1, d.size() + 1);
  out.topLeftCorner(d.size(), d.size()).diagonal() = d.cast<cd>();
  return out;
}

int sideIndex(Side s) { return static_cast<int>(s); }

}  // namespace

LiftedRisData liftRisForms(const ChannelSet& channels,
                           const std::vector<CMat>& w, double noiseRis) {
  const std::size_t users = channels.users();
  if (w.size() != users) throw std::invalid_argument("liftRisForms: user count");
  LiftedRisData d;
  std::vector<CMat> stacks;
  for (std::size_t k = 0; k < users; ++k) {
    stacks.push_back(cascadeStack(channels, static_cast<int>(k)));
  }
  for (std::size_t k = 0; k < users; ++k) {
    const CMat& c = stacks[k];
    std::vector<CMat> row;
    for (std::size_t i = 0; i < users; ++i) {
      row.push_back(hermitianPart(CMat(c * w[i] * c.adjoint()).conjugate()));
    }
    d.coupling.push_back(std::move(row));
    d.cascadeNoise.push_back(borderedDiagonal(channels.risToUser[k].cwiseAbs2()));
    const Vec incident =
        (channels.bsToRis * w[k] * channels.bsToRis.adjoint()).diagonal().real();
    d.amplify.push_back(borderedDiagonal(incident.array() + noiseRis));
    d.gain.push_back(hermitianPart(CMat(c * c.adjoint()).conjugate()));
  }
  return d;
}

LiftedRisData liftRisForms(const ChannelSet& channels, const BeamformerSet& beams,
                           double noiseRis) {
  return liftRisForms(channels, liftBeamformers(beams), noiseRis);
}

std::array<CVec, 2> surfaceLeadingEigvecs(const LiftedSurface& v) {
  return {leadingEigenpair(v.vT).vector, leadingEigenpair(v.vR).vector};
}

P5Problem buildP5(const LiftedRisData& data, const PowerBudget& budget,
                  const Permutation& order, const RisIterate& prev,
                  const SurfaceActivity& activity) {
  const int users = static_cast<int>(data.gain.size());
  if (users == 0) throw std::invalid_argument("buildP5: no users");
  const int dim = static_cast<int>(data.gain[0].rows());
  const int m = dim - 1;
  if (static_cast<int>(order.size()) != users || prev.a.size() != users ||
      prev.b.size() != users ||
      static_cast<int>(prev.v.userSide.size()) != users ||
      prev.v.vT.rows() != dim || prev.v.vR.rows() != dim) {
    throw std::invalid_argument("buildP5: inconsistent dimensions");
  }

  P5Problem out;
  out.noiseUnit = budget.noiseUser > 0.0 ? budget.noiseUser : 1.0;
  auto& p = out.problem;
  std::array<int, 2> usersOn{0, 0};
  for (Side s : prev.v.userSide) ++usersOn[sideIndex(s)];
  for (Side s : {Side::kTransmission, Side::kReflection}) {
    const int i = sideIndex(s);
    out.v[i] = sdp::BlockId{-1};
    if (activity.isActive(s) && usersOn[i] > 0 && activity.betaMax > 0.0) {
      out.v[i] = p.addPsdBlock(i == 0 ? "Vt" : "Vr", dim);
    }
  }
  const bool anyVariable = out.v[0].index >= 0 || out.v[1].index >= 0;

  // Tr(V_side M) * weight: a trace term for a variable side, a constant
  // for a fixed one.
  auto addSide = [&](AffineExpr& e, Side s, const CMat& mat, double weight) {
    const sdp::BlockId id = out.v[sideIndex(s)];
    if (id.index >= 0) {
      e.addTrace(id, weight * mat);
    } else {
      e.addConstant(weight * (prev.v.forSide(s) * mat).trace().real());
    }
  };
  auto sideOf = [&](int k) { return prev.v.userSide[k]; };

  // Users on a fixed side see constant signal and interference; their rate
  // is a constant and gets no variables (their constraints would have an
  // empty interior whenever the rate floor is tight).
  auto fixedUser = [&](int k) { return out.v[sideIndex(sideOf(k))].index < 0; };
  for (int k = 0; k < users; ++k) {
    if (fixedUser(k)) {
      out.recip.push_back(sdp::BlockId{-1});
      out.b.push_back(sdp::ScalarId{-1});
      out.r.push_back(sdp::ScalarId{-1});
      continue;
    }
    out.recip.push_back(p.addPsdBlock("Y" + std::to_string(k), 2, false));
    out.b.push_back(p.addScalar("B" + std::to_string(k), 0.0));
    out.r.push_back(p.addScalar("R" + std::to_string(k), budget.rateMin));
  }
  std::vector<int> rankOf(users);
  for (int rank = 0; rank < users; ++rank) rankOf[order[rank]] = rank;

  const double inv = 1.0 / out.noiseUnit;
  AffineExpr amplify;
  AffineExpr objective;
  for (int k = 0; k < users; ++k) {
    addSide(amplify, sideOf(k), data.amplify[k], 1.0);
    if (fixedUser(k)) {
      objective.addConstant(
          std::log2(1.0 + 1.0 / (prev.a(k) * prev.b(k))));
      continue;
    }
    const std::string tag = std::to_string(k);
    p.addConstraint(AffineExpr{}.addEntry(out.recip[k], 0, 1, 1.0, 2),
                    Relation::kEqual, 1.0, "unit off-diagonal " + tag);

    AffineExpr signal;
    addSide(signal, sideOf(k), data.signal(k), inv);
    signal.addEntry(out.recip[k], 1, 1, -1.0, 2);
    p.addConstraint(std::move(signal), Relation::kGreaterEqual, 0.0,
                    "signal " + tag);

    AffineExpr intf;
    intf.add(out.b[k], 1.0);
    for (int i = 0; i < users; ++i) {
      if (rankOf[i] > rankOf[k]) addSide(intf, sideOf(k), data.coupling[k][i], -inv);
    }
    addSide(intf, sideOf(k), data.cascadeNoise[k], -budget.noiseRis * inv);
    p.addConstraint(std::move(intf), Relation::kGreaterEqual, 1.0,
                    "interference " + tag);

    const ScaBound sca =
        scaRateBound(prev.a(k) * out.noiseUnit, prev.b(k) / out.noiseUnit);
    AffineExpr rate;
    rate.add(out.r[k], 1.0)
        .addEntry(out.recip[k], 0, 0, -sca.coeffA, 2)
        .add(out.b[k], -sca.coeffB);
    p.addConstraint(std::move(rate), Relation::kLessEqual, sca.constant,
                    "rate bound " + tag);

    objective.add(out.r[k], 1.0);
  }
  if (!anyVariable) {
    p.setObjective(std::move(objective));
    return out;
  }

  const double ampScale = budget.pAmplify > 0.0 ? 1.0 / budget.pAmplify : 1.0;
  amplify *= ampScale;
  p.addConstraint(std::move(amplify), Relation::kLessEqual,
                  budget.pAmplify * ampScale, "amplification power");

  // Decoding-order chain on combined gains, each row scaled by its current
  // magnitude.
  for (int rank = 0; rank + 1 < users; ++rank) {
    const int lo = order[rank];
    const int hi = order[rank + 1];
    if (out.v[sideIndex(sideOf(lo))].index < 0 &&
        out.v[sideIndex(sideOf(hi))].index < 0) {
      continue;
    }
    const double ref = std::max(
        (prev.v.forSide(sideOf(hi)) * data.gain[hi]).trace().real(), 1e-300);
    AffineExpr chain;
    addSide(chain, sideOf(hi), data.gain[hi], 1.0 / ref);
    addSide(chain, sideOf(lo), data.gain[lo], -1.0 / ref);
    p.addConstraint(std::move(chain), Relation::kGreaterEqual, 0.0,
                    "order " + std::to_string(rank));
  }

  for (Side s : {Side::kTransmission, Side::kReflection}) {
    const sdp::BlockId id = out.v[sideIndex(s)];
    if (id.index < 0) continue;
    p.addConstraint(AffineExpr{}.addEntry(id, m, m, 1.0, dim), Relation::kEqual,
                    1.0, "corner " + std::to_string(sideIndex(s)));
    // Penalty per user, linearized at the previous leading eigenvector.
    const CVec& z = prev.leadingEigvec[sideIndex(s)];
    if (z.size() != dim) throw std::invalid_argument("buildP5: eigvec size");
    const CMat proj = CMat::Identity(dim, dim) - z * z.adjoint();
    objective.addTrace(id, -(usersOn[sideIndex(s)] / prev.penaltyXi) * proj);
  }
  for (int e = 0; e < m; ++e) {
    AffineExpr energy;
    for (Side s : {Side::kTransmission, Side::kReflection}) {
      const sdp::BlockId id = out.v[sideIndex(s)];
      if (id.index >= 0) {
        energy.addEntry(id, e, e, 1.0, dim);
      } else {
        energy.addConstant(prev.v.forSide(s)(e, e).real());
      }
    }
    energy *= 1.0 / activity.betaMax;
    p.addConstraint(std::move(energy), Relation::kLessEqual, 1.0,
                    "energy " + std::to_string(e));
  }
  p.setObjective(std::move(objective));
  return out;
}

P5Result solveP5(const LiftedRisData& data, const PowerBudget& budget,
                 const Permutation& order, const RisIterate& prev,
                 const SurfaceActivity& activity, const sdp::ConicSolver& solver,
                 const sdp::Tolerances& tol, int maxIter) {
  const P5Problem p5 = buildP5(data, budget, order, prev, activity);
  P5Result res;
  res.next = prev;
  if (p5.problem.blocks().empty() && p5.problem.scalars().empty()) {
    // Nothing to optimize: every user sits on a fixed side.
    res.solution.status = sdp::SolveStatus::kOptimal;
    res.solution.objectiveValue = p5.problem.objective().constant();
    res.objective = res.solution.objectiveValue;
    for (int k = 0; k < static_cast<int>(p5.r.size()); ++k) {
      res.next.r(k) = std::log2(1.0 + 1.0 / (prev.a(k) * prev.b(k)));
    }
    return res;
  }
  res.solution = solver.solve(p5.problem, tol, maxIter);
  res.objective = res.solution.objectiveValue;
  const auto& s = res.solution;
  if (s.blocks.empty()) return res;
  for (Side side : {Side::kTransmission, Side::kReflection}) {
    const sdp::BlockId id = p5.v[sideIndex(side)];
    if (id.index >= 0) res.next.v.forSide(side) = hermitianPart(s.blocks[id.index]);
  }
  const int users = static_cast<int>(p5.b.size());
  for (int k = 0; k < users; ++k) {
    if (p5.r[k].index < 0) {
      res.next.r(k) = std::log2(1.0 + 1.0 / (prev.a(k) * prev.b(k)));
      continue;
    }
    res.next.a(k) = s.blocks[p5.recip[k].index](0, 0).real() / p5.noiseUnit;
    res.next.b(k) = s.scalars[p5.b[k].index] * p5.noiseUnit;
    res.next.r(k) = s.scalars[p5.r[k].index];
  }
  res.next.leadingEigvec = surfaceLeadingEigvecs(res.next.v);
  return res;
}

RisProfile extractRisProfile(const LiftedSurface& v, double epsilon,
                             const SurfaceActivity& activity) {
  const auto m = v.elements();
  RisProfile prof = RisProfile::dark(m, v.userSide, activity.betaMax);
  std::array<CVec, 2> u{CVec::Zero(m), CVec::Zero(m)};
  for (Side s : {Side::kTransmission, Side::kReflection}) {
    if (!activity.isActive(s)) continue;
    const CMat& x = v.forSide(s);
    const double viol = rankOneViolation(x);
    if (viol > epsilon) {
      throw RankViolationError("extractRisProfile: side " +
                                   std::to_string(sideIndex(s)) +
                                   " rank-one violation " + std::to_string(viol),
                               viol);
    }
    const EigenPair ep = leadingEigenpair(x);
    const CVec vec = std::sqrt(std::max(ep.value, 0.0)) * ep.vector;
    if (std::abs(vec(m)) < 1e-8 * std::max(1.0, vec.norm())) {
      throw std::domain_error("extractRisProfile: degenerate lift, last entry ~ 0");
    }
    u[sideIndex(s)] = vec.head(m) / vec(m);
  }
  prof = RisProfile::fromCoefficients(u[0], u[1], v.userSide, activity.betaMax);
  for (Eigen::Index e = 0; e < m; ++e) {
    prof.betaT(e) = std::clamp(prof.betaT(e), 0.0, activity.betaMax);
    prof.betaR(e) = std::clamp(prof.betaR(e), 0.0, activity.betaMax);
    const double total = prof.betaT(e) + prof.betaR(e);
    if (total > activity.betaMax) {
      prof.betaT(e) *= activity.betaMax / total;
      prof.betaR(e) *= activity.betaMax / total;
    }
  }
  return prof;
}

}  // namespace mfris
