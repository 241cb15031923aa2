#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mfris/beamforming.hpp"

using namespace mfris;
using fixtures::randomCVec;

namespace {

double quad(const CMat& a, const CMat& w) { return (a * w).trace().real(); }

BfIterate startFrom(const ChannelForms& forms, const BeamformerSet& beams,
                    const PowerBudget& budget, const Permutation& order,
                    double eta) {
  BfIterate it;
  it.w = liftBeamformers(beams);
  tightenAuxiliaries(liftedTerms(forms, it.w, budget, order), it.a, it.b);
  it.r = Vec::Zero(static_cast<Eigen::Index>(it.w.size()));
  for (const auto& w : it.w) it.leadingEigvec.push_back(leadingEigenpair(w).vector);
  it.penaltyEta = eta;
  return it;
}

double penalizedObjective(const ChannelForms& forms, const std::vector<CMat>& w,
                          const PowerBudget& budget, const Permutation& order,
                          double eta) {
  double v = 0.0;
  for (double r : liftedRates(forms, w, budget, order)) v += r;
  for (const auto& x : w) v -= rankOneViolation(x) / eta;
  return v;
}

}  // namespace

TEST_CASE("without a surface the forms reduce to the direct channel") {
  Rng rng(1);
  const auto ch = fixtures::randomChannels(2, 3, 4, rng);
  const auto prof = RisProfile::dark(4, fixtures::alternatingSides(2), 1.0);
  const auto f = liftChannelForms(ch, prof);
  for (int k = 0; k < 2; ++k) {
    const CMat expect = ch.direct[k] * ch.direct[k].adjoint();
    CHECK((f.combined[k] - expect).norm() < 1e-14);
    CHECK(f.amplify[k].norm() == 0.0);
    CHECK(f.cascadeGain[k] == 0.0);
  }
}

TEST_CASE("combined form has rank at most one and traces match vector forms") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = fixtures::randomChannels(3, 4, 5, rng);
    const auto prof = fixtures::randomProfile(5, fixtures::alternatingSides(3), 10.0, rng);
    const auto f = liftChannelForms(ch, prof);
    const auto lifted = liftChannelForms(ch, LiftedSurface::fromProfile(prof));
    for (int k = 0; k < 3; ++k) {
      Eigen::SelfAdjointEigenSolver<CMat> es(f.combined[k]);
      CHECK(std::abs(es.eigenvalues()(2)) < 1e-12 * es.eigenvalues()(3));
      const CVec w = randomCVec(4, rng);
      const CMat ww = w * w.adjoint();
      const cd hw = (combinedChannel(ch, prof, k) * w)(0);
      CHECK(std::abs(quad(f.combined[k], ww) - std::norm(hw)) < 1e-10 * std::norm(hw));
      const double amp = (surfaceMatrix(prof, k) * ch.bsToRis * w).squaredNorm();
      CHECK(std::abs(quad(f.amplify[k], ww) - amp) < 1e-10 * amp);
      CHECK((lifted.combined[k] - f.combined[k]).norm() < 1e-10 * f.combined[k].norm());
      CHECK((lifted.amplify[k] - f.amplify[k]).norm() < 1e-10 * f.amplify[k].norm());
      CHECK(lifted.cascadeGain[k] == doctest::Approx(f.cascadeGain[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("SCA bound is tight at the expansion point") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const ScaBound s = scaRateBound(a, b);
    const double exact = std::log2(1.0 + 1.0 / (a * b));
    CHECK(std::abs(s(a, b) - exact) <= 1e-12 * std::max(1.0, exact));
  }
}

TEST_CASE("SCA bound at unit expansion point has the closed form") {
  const ScaBound s = scaRateBound(1.0, 1.0);
  for (double a : {0.2, 1.0, 3.5}) {
    for (double b : {0.1, 2.0, 7.0}) {
      const double expect = 1.0 - kLog2e * (a - 1.0) / 2.0 - kLog2e * (b - 1.0) / 2.0;
      CHECK(s(a, b) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("SCA bound never exceeds the rate on sampled points") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    double ap = 0, bp = 0, a = 0, b = 0;
    while (ap <= 0) ap = u(rng);
    while (bp <= 0) bp = u(rng);
    while (a <= 0) a = u(rng);
    while (b <= 0) b = u(rng);
    CHECK(scaRateBound(ap, bp)(a, b) <= std::log2(1.0 + 1.0 / (a * b)) + 1e-9);
  }
}

TEST_CASE("SCA bound rejects non-positive expansion points") {
  CHECK_THROWS_AS(scaRateBound(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(scaRateBound(1.0, -2.0), std::domain_error);
}

TEST_CASE("spectral linearization values") {
  Rng rng(5);
  const CVec v = randomCVec(3, rng);
  const CMat r1 = v * v.adjoint();
  CHECK(std::abs(spectralPenaltyLinearization(r1).upperBound(r1)) < 1e-12 * r1.norm());

  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  CHECK(spectralPenaltyLinearization(d).upperBound(d) == doctest::Approx(1.0).epsilon(1e-14));

  const auto zero = spectralPenaltyLinearization(CMat::Zero(3, 3));
  CHECK(std::abs(zero.leading(0) - cd(1.0)) < 1e-15);
  CHECK(zero.leading.norm() == doctest::Approx(1.0));

  for (int i = 0; i < 200; ++i) {
    const auto lin = spectralPenaltyLinearization(fixtures::randomPsd(4, 1 + i % 4, rng));
    const CMat w = fixtures::randomPsd(4, 1 + (i / 4) % 4, rng);
    CHECK(lin.upperBound(w) >= rankOneViolation(w) - 1e-9);
  }
}

TEST_CASE("single user without surface approaches the MRT capacity") {
  Rng rng(6);
  auto ch = fixtures::randomChannels(1, 3, 2, rng, 3e-5);
  const auto prof = RisProfile::dark(2, {Side::kReflection}, 1.0);
  PowerBudget budget;
  budget.rateMin = 0.0;
  const auto forms = liftChannelForms(ch, prof);
  const Permutation order{0};
  BeamformerSet beams;
  beams.precoders.push_back(CVec::Constant(3, std::sqrt(budget.pMaxTransmit / 12.0)));
  BfIterate it = startFrom(forms, beams, budget, order, 1e6);
  sdp::InteriorPointSolver solver;
  for (int i = 0; i < 60; ++i) {
    const auto res = solveP3(forms, budget, order, it, solver, {1e-10, 1e-10});
    REQUIRE(res.solution.optimal());
    it = res.next;
    tightenAuxiliaries(liftedTerms(forms, it.w, budget, order), it.a, it.b);
  }
  const double capacity =
      std::log2(1.0 + budget.pMaxTransmit * ch.direct[0].squaredNorm() / budget.noiseUser);
  const double rate = liftedRates(forms, it.w, budget, order)[0];
  CHECK(rate == doctest::Approx(capacity).epsilon(1e-4));
  CHECK(it.w[0].trace().real() == doctest::Approx(budget.pMaxTransmit).epsilon(1e-4));
  const CVec dir = leadingEigenpair(it.w[0]).vector;
  CHECK(std::abs(dir.dot(ch.direct[0])) / ch.direct[0].norm() ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero transmit budget") {
  Rng rng(7);
  const auto ch = fixtures::randomChannels(2, 2, 2, rng, 1e-4);
  const auto prof = RisProfile::dark(2, fixtures::alternatingSides(2), 1.0);
  const auto forms = liftChannelForms(ch, prof);
  PowerBudget budget;
  budget.pMaxTransmit = 0.0;
  budget.rateMin = 0.0;
  BfIterate prev;
  prev.w.assign(2, CMat::Zero(2, 2));
  prev.a = prev.b = prev.r = Vec::Ones(2);
  prev.leadingEigvec.assign(2, CVec::Unit(2, 0));
  sdp::InteriorPointSolver solver;
  auto res = solveP3(forms, budget, {0, 1}, prev, solver, {});
  CHECK(res.solution.optimal());
  for (const auto& w : res.next.w) CHECK(w.norm() == 0.0);
  CHECK(res.next.r.sum() == 0.0);
  budget.rateMin = 0.1;
  res = solveP3(forms, budget, {0, 1}, prev, solver, {});
  CHECK(res.solution.status == sdp::SolveStatus::kInfeasible);
}

TEST_CASE("desk instance: one solve does not lower the penalized objective") {
  const auto desk = fixtures::deskInstance(11, 4, 4, 8);
  Rng rng(12);
  PowerBudget budget;
  budget.pMaxTransmit = 10.0;
  const auto prof = fixtures::randomProfile(8, desk.sides, 1.0, rng);
  const auto forms = liftChannelForms(desk.channels, prof);
  const Permutation order = decodingOrder(desk.channels, prof);
  BeamformerSet beams;
  std::vector<CVec> dirs;
  for (int k = 0; k < 4; ++k) {
    dirs.push_back(combinedChannel(desk.channels, prof, k).adjoint().normalized());
  }
  const auto start = qosBeams(desk.channels, prof, budget, order, dirs);
  REQUIRE(start.has_value());
  beams = *start;
  const auto rep = checkFeasibility(desk.channels, prof, beams, budget, order);
  INFO(rep.transmitSlack, " ", rep.amplifySlack, " ", rep.amplitudeSlack, " ", rep.orderSlack, " ", rep.qosSlack[0], " ", rep.qosSlack[1], " ", rep.qosSlack[2], " ", rep.qosSlack[3]);
  REQUIRE(rep.feasible);

  BfIterate it = startFrom(forms, beams, budget, order, 10.0);
  sdp::InteriorPointSolver solver;
  double before = penalizedObjective(forms, it.w, budget, order, 10.0);
  for (int i = 0; i < 4; ++i) {
    const auto res = solveP3(forms, budget, order, it, solver, {1e-9, 1e-10});
    REQUIRE(res.solution.optimal());
    const double after = penalizedObjective(forms, res.next.w, budget, order, 10.0);
    CHECK(after >= before - 1e-6);
    CHECK(res.objective <= after + 1e-6);
    it = res.next;
    tightenAuxiliaries(liftedTerms(forms, it.w, budget, order), it.a, it.b);
    before = after;
  }
}

TEST_CASE("extraction of rank-one and nearly rank-one matrices") {
  Rng rng(8);
  const CVec v = randomCVec(4, rng);
  const auto beams = extractBeamformers({CMat(v * v.adjoint())}, 1e-6);
  const CVec& w = beams.precoders[0];
  CHECK(std::abs(std::abs(w.dot(v)) - v.squaredNorm()) < 1e-10 * v.squaredNorm());
  CHECK(w.norm() == doctest::Approx(v.norm()).epsilon(1e-12));

  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-9;
  CHECK(rankOneViolation(d) == doctest::Approx(1e-9).epsilon(1e-6));
  const auto e = extractBeamformers({d}, 1e-6).precoders[0];
  CHECK(std::abs(std::abs(e(0)) - 1.0) < 1e-12);
  CHECK(std::abs(e(1)) < 1e-12);
  CHECK_THROWS_AS(extractBeamformers({d}, 1e-12), RankViolationError);
}

TEST_CASE("extraction rescales beams into both budgets") {
  Rng rng(9);
  const auto ch = fixtures::randomChannels(2, 3, 4, rng, 1e-3, 1e-2);
  const auto prof = fixtures::randomProfile(4, fixtures::alternatingSides(2), 100.0, rng);
  PowerBudget budget;
  budget.pMaxTransmit = 1.0;
  budget.pAmplify = 1e-3;
  std::vector<CMat> w;
  for (int k = 0; k < 2; ++k) {
    const CVec v = randomCVec(3, rng, 3.0);
    w.push_back(v * v.adjoint());
  }
  const auto beams = extractBeamformers(w, 1e-6, ch, prof, budget);
  CHECK(beams.totalPower() <= budget.pMaxTransmit * (1 + 1e-12));
  CHECK(amplificationPower(ch, prof, beams, budget.noiseRis) <= budget.pAmplify * (1 + 1e-12));
}

TEST_CASE("minimum-power beams meet the floors or report failure") {
  const auto desk = fixtures::deskInstance(21, 4, 4, 8);
  Rng rng(22);
  const auto prof = fixtures::randomProfile(8, desk.sides, 1.0, rng);
  const Permutation order = decodingOrder(desk.channels, prof);
  std::vector<CVec> dirs;
  for (int k = 0; k < 4; ++k) {
    dirs.push_back(combinedChannel(desk.channels, prof, k).adjoint().normalized());
  }
  PowerBudget budget;
  budget.rateMin = 1.0;
  const auto beams = qosBeams(desk.channels, prof, budget, order, dirs, 0.5);
  REQUIRE(beams.has_value());
  const auto rep = checkFeasibility(desk.channels, prof, *beams, budget, order);
  CHECK(rep.feasible);
  budget.rateMin = 1e3;
  CHECK_FALSE(qosBeams(desk.channels, prof, budget, order, dirs).has_value());
}
