#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mfris/optimizer.hpp"

using namespace mfris;

namespace {

constexpr int kT = static_cast<int>(Side::kTransmission);
constexpr int kR = static_cast<int>(Side::kReflection);

PowerBudget deskBudget() {
  PowerBudget b;
  b.pMaxTransmit = dbToLinear(10.0);
  return b;
}

// Signal and interference-plus-noise of every user, straight from the model.
void directTerms(const ChannelSet& ch, const RisProfile& p, const BeamformerSet& b,
                 const PowerBudget& budget, std::vector<double>& sig,
                 std::vector<double>& intf) {
  const auto order = decodingOrder(ch, p);
  const int users = static_cast<int>(ch.users());
  sig.assign(users, 0.0);
  intf.assign(users, 0.0);
  for (int rank = 0; rank < users; ++rank) {
    const int k = order[rank];
    const CRowVec h = combinedChannel(ch, p, k);
    sig[k] = std::norm((h * b.precoders[k])(0));
    intf[k] = budget.noiseUser +
              budget.noiseRis * (ch.risToUser[k].adjoint() * surfaceMatrix(p, k)).squaredNorm();
    for (int j = rank + 1; j < users; ++j) intf[k] += std::norm((h * b.precoders[order[j]])(0));
  }
}

}  // namespace

TEST_CASE("preset table") {
  const double bm = dbToLinear(22.0);
  auto star = applyPreset(ArchitecturePreset::kStarRis, bm);
  CHECK(star.betaMax == 1.0);
  CHECK((star.active[kT] && star.active[kR]));
  auto active = applyPreset(ArchitecturePreset::kActiveRis, bm);
  CHECK(active.betaMax == bm);
  CHECK_FALSE(active.active[kT]);
  CHECK(active.active[kR]);
  auto sfr = applyPreset(ArchitecturePreset::kSfRisReflect, bm);
  CHECK(sfr.betaMax == 1.0);
  CHECK_FALSE(sfr.active[kT]);
  CHECK(sfr.active[kR]);
  auto sft = applyPreset(ArchitecturePreset::kSfRisTransmit, bm);
  CHECK(sft.betaMax == 1.0);
  CHECK(sft.active[kT]);
  CHECK_FALSE(sft.active[kR]);
  auto mf = applyPreset(ArchitecturePreset::kMfRis, bm);
  CHECK(mf.betaMax == bm);
  CHECK((mf.active[kT] && mf.active[kR] && !mf.surfaceOff));
  auto none = applyPreset(ArchitecturePreset::kNoRis, bm);
  CHECK(none.surfaceOff);
  CHECK_FALSE((none.active[kT] || none.active[kR]));

  for (auto p : allPresets()) CHECK(parsePreset(presetName(p)) == p);
  CHECK_THROWS_AS(parsePreset("MF"), std::invalid_argument);
}

TEST_CASE("config validation") {
  AlgorithmConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.delta == 1e-6);
  CHECK(c.mu == 0.5);
  CHECK(c.epsilon == 1e-6);
  CHECK(c.maxInnerIter == 30);
  c.mu = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.delta = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.epsilon = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero floor: silent beams and a faint surface are feasible") {
  const auto desk = fixtures::deskInstance(1, 4, 4, 8);
  PowerBudget budget = deskBudget();
  budget.rateMin = 0.0;
  Rng rng(1);
  auto prof = fixtures::randomProfile(8, desk.sides, 1e-3, rng);
  const auto rep = checkFeasibility(desk.channels, prof, BeamformerSet::zeros(4, 4), budget,
                                    std::nullopt, 1e-6);
  CHECK(rep.transmitSlack == budget.pMaxTransmit);
  CHECK(rep.amplifySlack > 0.0);
  for (double q : rep.qosSlack) CHECK(q == 0.0);

  AlgorithmConfig cfg;
  cfg.seed = 3;
  const auto pt = initializeFeasible(desk.channels, budget, dbToLinear(22.0), desk.sides,
                                     ArchitecturePreset::kMfRis, cfg);
  CHECK(checkFeasibility(desk.channels, pt.profile, pt.beams, budget).feasible);
}

TEST_CASE("start point: auxiliaries are tight") {
  for (auto preset : allPresets()) {
    const auto desk = fixtures::deskInstance(4, 4, 4, 8);
    AlgorithmConfig cfg;
    cfg.seed = 7;
    const auto budget = deskBudget();
    const auto pt = initializeFeasible(desk.channels, budget, dbToLinear(22.0), desk.sides,
                                       preset, cfg);
    CHECK(checkFeasibility(desk.channels, pt.profile, pt.beams, budget).feasible);
    std::vector<double> sig, intf;
    directTerms(desk.channels, pt.profile, pt.beams, budget, sig, intf);
    for (int k = 0; k < 4; ++k) {
      CHECK(pt.a(k) * sig[k] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pt.b(k) == doctest::Approx(intf[k]).epsilon(1e-12));
    }
    pt.profile.validate();
    if (preset == ArchitecturePreset::kNoRis) {
      CHECK(pt.profile.betaT.norm() + pt.profile.betaR.norm() == 0.0);
    }
    if (preset == ArchitecturePreset::kActiveRis) CHECK(pt.profile.betaT.norm() == 0.0);
  }
}

TEST_CASE("impossible floor fails initialization") {
  const auto desk = fixtures::deskInstance(2, 4, 4, 8);
  PowerBudget budget;
  budget.pMaxTransmit = 1.0;
  budget.rateMin = 1e3;
  AlgorithmConfig cfg;
  cfg.randomStartAttempts = 20;
  CHECK_THROWS_AS(initializeFeasible(desk.channels, budget, dbToLinear(22.0), desk.sides,
                                     ArchitecturePreset::kMfRis, cfg),
                  InitializationError);
  CHECK_THROWS_AS(runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                                ArchitecturePreset::kMfRis, cfg),
                  InitializationError);
}

TEST_CASE("desk runs ascend, converge and stay feasible") {
  for (std::uint64_t seed : {1u, 2u}) {
    for (auto preset : {ArchitecturePreset::kMfRis, ArchitecturePreset::kStarRis}) {
      CAPTURE(seed);
      CAPTURE(presetName(preset));
      const auto desk = fixtures::deskInstance(seed, 4, 4, 8);
      AlgorithmConfig cfg;
      cfg.seed = seed;
      const auto budget = deskBudget();
      const auto res = runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                                     preset, cfg);
      CHECK(res.converged);
      CHECK(res.feasible);
      CHECK(res.solverFailures == 0);
      CHECK(res.status == "converged");
      const auto& tr = res.trace.inner;
      REQUIRE(tr.size() >= 2);
      for (std::size_t i = 1; i < tr.size(); ++i) {
        CHECK(std::isfinite(tr[i].sumRate));
        // Holds inside each inner loop and across warm starts.
        CHECK(tr[i].objective >= tr[i - 1].objective - 1e-6);
      }
      CHECK(tr.back().rankViolationW <= cfg.epsilon);
      CHECK(tr.back().rankViolationV <= cfg.epsilon);
      CHECK(res.trace.outer.front().eta == cfg.etaInit);

      const double first = tr.front().sumRate;
      CHECK(res.sumRate >= first - 1e-6);
      // Extracted point against the lifted rates of the final iterate.
      CHECK(std::abs(res.sumRate - tr.back().sumRate) <= 1e-3 * tr.back().sumRate);
      CHECK(checkFeasibility(desk.channels, res.profile, res.beams, budget).feasible);
      res.profile.validate(1e-9);
    }
  }
}

TEST_CASE("no surface: the surface channels play no role") {
  auto desk = fixtures::deskInstance(3, 4, 4, 8);
  AlgorithmConfig cfg;
  cfg.seed = 3;
  const auto budget = deskBudget();
  const auto a = runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                               ArchitecturePreset::kNoRis, cfg);
  for (auto& g : desk.channels.risToUser) g *= 5.0;
  desk.channels.bsToRis *= cd(0.0, 2.0);
  const auto b = runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                               ArchitecturePreset::kNoRis, cfg);
  CHECK(a.sumRate == doctest::Approx(b.sumRate).epsilon(1e-9));
  CHECK(a.profile.betaT.norm() + a.profile.betaR.norm() == 0.0);
  for (const auto& r : a.trace.inner) CHECK(r.penaltyV == 0.0);
  CHECK(a.feasible);
}

TEST_CASE("runs are reproducible") {
  const auto desk = fixtures::deskInstance(5, 4, 4, 8);
  AlgorithmConfig cfg;
  cfg.seed = 11;
  cfg.maxOuterIter = 2;
  const auto budget = deskBudget();
  const auto a = runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                               ArchitecturePreset::kActiveRis, cfg);
  const auto b = runAlgorithm1(desk.channels, budget, dbToLinear(22.0), desk.sides,
                               ArchitecturePreset::kActiveRis, cfg);
  CHECK(a.sumRate == b.sumRate);
  REQUIRE(a.trace.inner.size() == b.trace.inner.size());
  for (std::size_t i = 0; i < a.trace.inner.size(); ++i) {
    CHECK(a.trace.inner[i].objective == b.trace.inner[i].objective);
  }
}
