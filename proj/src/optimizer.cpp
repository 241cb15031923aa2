#include "mfris/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mfris {

void AlgorithmConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("mu must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(etaInit > 0.0) || !(xiInit > 0.0)) {
    throw std::invalid_argument("penalty factors must be > 0");
  }
  if (maxInnerIter < 1 || maxOuterIter < 1 || randomStartAttempts < 1 ||
      solverMaxIter < 1) {
    throw std::invalid_argument("iteration limits must be >= 1");
  }
}

const char* presetName(ArchitecturePreset p) {
  switch (p) {
    case ArchitecturePreset::kMfRis: return "MF_RIS";
    case ArchitecturePreset::kSfRisReflect: return "SF_RIS_reflect";
    case ArchitecturePreset::kSfRisTransmit: return "SF_RIS_transmit";
    case ArchitecturePreset::kActiveRis: return "ACTIVE_RIS";
    case ArchitecturePreset::kStarRis: return "STAR_RIS";
    case ArchitecturePreset::kNoRis: return "NO_RIS";
  }
  return "unknown";
}

std::vector<ArchitecturePreset> allPresets() {
  return {ArchitecturePreset::kMfRis,        ArchitecturePreset::kActiveRis,
          ArchitecturePreset::kStarRis,      ArchitecturePreset::kSfRisReflect,
          ArchitecturePreset::kSfRisTransmit, ArchitecturePreset::kNoRis};
}

ArchitecturePreset parsePreset(const std::string& name) {
  for (auto p : allPresets()) {
    if (name == presetName(p)) return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

PresetBounds applyPreset(ArchitecturePreset preset, double configuredBetaMax) {
  const int t = static_cast<int>(Side::kTransmission);
  const int r = static_cast<int>(Side::kReflection);
  PresetBounds b;
  b.betaMax = configuredBetaMax;
  switch (preset) {
    case ArchitecturePreset::kMfRis:
      break;
    case ArchitecturePreset::kSfRisReflect:
      b.betaMax = 1.0;
      b.active[t] = false;
      break;
    case ArchitecturePreset::kSfRisTransmit:
      b.betaMax = 1.0;
      b.active[r] = false;
      break;
    case ArchitecturePreset::kActiveRis:
      b.active[t] = false;
      break;
    case ArchitecturePreset::kStarRis:
      b.betaMax = 1.0;
      break;
    case ArchitecturePreset::kNoRis:
      b.active = {false, false};
      b.surfaceOff = true;
      break;
  }
  return b;
}

namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

RisProfile randomProfile(Eigen::Index elements, const std::vector<Side>& sides,
                         const PresetBounds& bounds, Rng& rng) {
  RisProfile p = RisProfile::dark(elements, sides, bounds.betaMax);
  if (bounds.surfaceOff) return p;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool both = bounds.active[0] && bounds.active[1];
  for (Eigen::Index m = 0; m < elements; ++m) {
    const double total = bounds.betaMax * u(rng);
    const double split = both ? u(rng) : (bounds.active[0] ? 1.0 : 0.0);
    p.betaT(m) = total * split;
    p.betaR(m) = total - p.betaT(m);
    p.thetaT(m) = bounds.active[0] ? 2.0 * kPi * u(rng) : 0.0;
    p.thetaR(m) = bounds.active[1] ? 2.0 * kPi * u(rng) : 0.0;
  }
  return p;
}

CVec randomDirection(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cd(g(rng), g(rng));
  return v.normalized();
}

Permutation orderByGain(const std::vector<double>& gain) {
  Permutation order(gain.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gain[a] < gain[b]; });
  return order;
}

/// Decoding order from the lifted surface: ascending Tr(V_k Rbar_k).
Permutation liftedOrder(const ChannelSet& channels, const LiftedSurface& v) {
  std::vector<double> gain;
  for (std::size_t k = 0; k < channels.users(); ++k) {
    const CMat c = cascadeStack(channels, static_cast<int>(k));
    const CMat rbar = CMat(c * c.adjoint()).conjugate();
    gain.push_back((v.forUser(static_cast<int>(k)) * rbar).trace().real());
  }
  return orderByGain(gain);
}

struct Evaluation {
  double sumRate = 0.0;
  double penaltyW = 0.0;
  double penaltyV = 0.0;
  double violationW = 0.0;
  double violationV = 0.0;

  double objective() const { return sumRate - penaltyW - penaltyV; }
};

Evaluation evaluate(const ChannelSet& channels, const std::vector<CMat>& w,
                    const LiftedSurface& v, const PowerBudget& budget,
                    const Permutation& order, double eta, double xi) {
  Evaluation e;
  const auto forms = liftChannelForms(channels, v);
  for (double r : liftedRates(forms, w, budget, order)) e.sumRate += r;
  for (const auto& x : w) {
    const double viol = rankOneViolation(x);
    e.penaltyW += viol / eta;
    e.violationW = std::max(e.violationW, viol);
  }
  for (Side s : v.userSide) {
    const double viol = rankOneViolation(v.forSide(s));
    e.penaltyV += viol / xi;
    e.violationV = std::max(e.violationV, viol);
  }
  return e;
}

}  // namespace

InitialPoint initializeFeasible(const ChannelSet& channels,
                                const PowerBudget& budget, double betaMax,
                                const std::vector<Side>& userSide,
                                ArchitecturePreset preset,
                                const AlgorithmConfig& config) {
  const PresetBounds bounds = applyPreset(preset, betaMax);
  const auto users = channels.users();
  const auto n = channels.antennas();
  Rng rng(config.seed ^ 0x5eedf00dULL);
  double bestSlack = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < config.randomStartAttempts; ++attempt) {
    InitialPoint pt;
    pt.attempts = attempt + 1;
    pt.profile = randomProfile(channels.elements(), userSide, bounds, rng);
    const Permutation order = decodingOrder(channels, pt.profile);
    std::vector<CVec> dirs;
    for (std::size_t k = 0; k < users; ++k) {
      CVec d = combinedChannel(channels, pt.profile, static_cast<int>(k)).adjoint();
      if (d.norm() > 0.0) d.normalize();
      // Later attempts move away from the matched filters.
      const double spread = attempt == 0 ? 0.0 : std::min(1.0, 0.1 * attempt);
      d += spread * randomDirection(n, rng);
      dirs.push_back(d.norm() > 0.0 ? CVec(d.normalized()) : randomDirection(n, rng));
    }
    const auto beams = qosBeams(channels, pt.profile, budget, order, dirs);
    if (!beams) continue;
    const auto rep = checkFeasibility(channels, pt.profile, *beams, budget, order);
    bestSlack = std::max(bestSlack, rep.worstSlack());
    if (!rep.feasible) continue;
    pt.beams = *beams;
    const auto terms =
        liftedTerms(liftChannelForms(channels, pt.profile),
                    liftBeamformers(pt.beams), budget, order);
    try {
      tightenAuxiliaries(terms, pt.a, pt.b);
    } catch (const std::domain_error&) {
      continue;
    }
    return pt;
  }
  throw InitializationError(
      "no feasible start in " + std::to_string(config.randomStartAttempts) +
      " attempts (best worst-slack " + std::to_string(bestSlack) + ")");
}

AlgorithmResult runAlgorithm1(const ChannelSet& channels,
                              const PowerBudget& budget, double betaMax,
                              const std::vector<Side>& userSide,
                              ArchitecturePreset preset,
                              const AlgorithmConfig& config) {
  config.validate();
  const PresetBounds bounds = applyPreset(preset, betaMax);
  const SurfaceActivity activity = bounds.activity();
  const InitialPoint init =
      initializeFeasible(channels, budget, betaMax, userSide, preset, config);
  const sdp::InteriorPointSolver solver;

  AlgorithmResult result;
  std::vector<CMat> w = liftBeamformers(init.beams);
  LiftedSurface v = LiftedSurface::fromProfile(init.profile);
  Permutation order = decodingOrder(channels, init.profile);
  double eta = config.etaInit;
  double xi = config.xiInit;
  std::string status = "max_outer";
  bool converged = false;

  for (int outer = 0; outer < config.maxOuterIter && status == "max_outer"; ++outer) {
    OuterRecord orec{eta, xi, 0, false};
    auto t0 = Clock::now();
    Evaluation ev = evaluate(channels, w, v, budget, order, eta, xi);
    result.trace.inner.push_back({outer, 0, ev.sumRate, ev.objective(), ev.penaltyW,
                                  ev.penaltyV, ev.violationW, ev.violationV, 0.0, 0.0});
    double prevObjective = ev.objective();
    for (int inner = 1; inner <= config.maxInnerIter; ++inner) {
      t0 = Clock::now();
      double residual = 0.0;
      int failed = 0;
      // A subproblem that does not solve leaves its block unchanged; the
      // previous iterate stays feasible for the next solve.
      auto noteFailure = [&](const char* which, const sdp::SdpSolution& sol) {
        ++failed;
        ++result.solverFailures;
        result.lastFailure = std::string(which) + ": " + sdp::statusName(sol.status) +
                             (sol.message.empty() ? "" : " (" + sol.message + ")");
      };
      try {
        const auto forms = liftChannelForms(channels, v);
        BfIterate bf;
        bf.w = w;
        tightenAuxiliaries(liftedTerms(forms, w, budget, order), bf.a, bf.b);
        bf.r = Vec::Zero(bf.a.size());
        for (const auto& x : w) bf.leadingEigvec.push_back(leadingEigenpair(x).vector);
        bf.penaltyEta = eta;
        const auto p3 = solveP3(forms, budget, order, bf, solver, config.solverTol,
                                config.solverMaxIter);
        if (p3.solution.optimal()) {
          residual = p3.solution.primalResidual;
          w = p3.next.w;
        } else {
          noteFailure("beamforming", p3.solution);
        }

        if (bounds.surfaceOff) {
          ++failed;  // nothing to update on the surface side
        } else {
          RisIterate ri;
          ri.v = v;
          tightenAuxiliaries(liftedTerms(liftChannelForms(channels, v), w, budget, order),
                             ri.a, ri.b);
          ri.r = Vec::Zero(ri.a.size());
          ri.leadingEigvec = surfaceLeadingEigvecs(v);
          ri.penaltyXi = xi;
          const auto data = liftRisForms(channels, w, budget.noiseRis);
          const auto p5 = solveP5(data, budget, order, ri, activity, solver,
                                  config.solverTol, config.solverMaxIter);
          if (p5.solution.optimal()) {
            residual = std::max(residual, p5.solution.primalResidual);
            v = p5.next.v;
          } else {
            noteFailure("surface", p5.solution);
          }
        }
      } catch (const std::domain_error& e) {
        status = std::string("numerical_failure: ") + e.what();
        break;
      }
      if (failed == 2) break;
      ev = evaluate(channels, w, v, budget, order, eta, xi);
      result.trace.inner.push_back({outer, inner, ev.sumRate, ev.objective(),
                                    ev.penaltyW, ev.penaltyV, ev.violationW,
                                    ev.violationV, residual, msSince(t0)});
      ++orec.innerIterations;
      ++result.iterations;
      const double change = std::abs(ev.objective() - prevObjective) /
                            std::max(std::abs(prevObjective), 1e-12);
      prevObjective = ev.objective();
      if (change < config.delta) break;
    }
    if (status != "max_outer") {
      result.trace.outer.push_back(orec);
      break;
    }
    if (!bounds.surfaceOff) {
      const Permutation fresh = liftedOrder(channels, v);
      if (fresh != order) {
        order = fresh;
        orec.reordered = true;
      }
    }
    result.trace.outer.push_back(orec);
    ev = evaluate(channels, w, v, budget, order, eta, xi);
    if (ev.violationW <= config.epsilon && ev.violationV <= config.epsilon) {
      converged = true;
      status = "converged";
      break;
    }
    eta *= config.mu;
    xi *= config.mu;
  }

  // Extraction. Without convergence the leading eigenvectors are taken as is
  // and the run is flagged.
  const double inf = std::numeric_limits<double>::infinity();
  bool usable = true;
  try {
    result.beams = extractBeamformers(w, inf);
    result.profile = bounds.surfaceOff
                         ? RisProfile::dark(channels.elements(), userSide, bounds.betaMax)
                         : extractRisProfile(v, inf, activity);
    enforcePowerBudgets(channels, result.profile, budget, result.beams);
  } catch (const std::exception& e) {
    usable = false;
    status += std::string("; extraction failed: ") + e.what();
  }
  if (usable) {
    const auto rep = checkFeasibility(channels, result.profile, result.beams, budget);
    usable = rep.feasible;
    if (!usable) status += "; extracted point infeasible";
  }
  if (!usable) {
    result.beams = init.beams;
    result.profile = init.profile;
    status += "; returned initial point";
    converged = false;
  }
  result.converged = converged;
  result.feasible =
      checkFeasibility(channels, result.profile, result.beams, budget).feasible;
  result.sumRate = sumRate(channels, result.profile, result.beams, budget);
  result.status = status;
  return result;
}

}  // namespace mfris
