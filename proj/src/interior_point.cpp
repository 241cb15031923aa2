// Primal-dual path-following solver for small dense SDPs.
//
// Every problem is compiled to the real standard form
//   min <C, X>  s.t.  A(X) = b,  X in S+^{n_1} x ... x S+^{n_p} x R+^l
// with dual  max b'y  s.t.  A^T(y) + Z = C.  Complex Hermitian blocks enter
// through phi(X) = [Re X, -Im X; Im X, Re X], for which Re Tr(CX) equals
// Tr(phi(C) phi(X)) / 2. Solutions of the embedded problem need not carry the
// phi structure; averaging the two diagonal quadrants (and the antisymmetric
// off-diagonal part) maps any feasible point back to a feasible Hermitian one
// with the same objective.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfris/sdp_problem.hpp"

namespace mfris::sdp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kReducedAccuracy = 100.0;

struct ScalarMap {
  double shift = 0.0;
  int plus = -1;   // lp index with coefficient +1
  int minus = -1;  // lp index with coefficient -1
};

struct Compiled {
  std::vector<int> dims;
  int nlp = 0;
  int m = 0;
  // Per block, the (row, matrix) pairs of constraints touching it.
  std::vector<std::vector<std::pair<int, Mat>>> blockRows;
  Mat alp;  // m x nlp
  Vec b;
  std::vector<Mat> c;
  Vec clp;
  double objConstant = 0.0;  // of the original maximization
  std::vector<double> rowScale;
  std::vector<ScalarMap> scalarMap;
  int originalRows = 0;
  bool trivialInfeasible = false;
};

Mat embed(const CMat& herm, bool complex) {
  if (!complex) return herm.real();
  const auto n = herm.rows();
  Mat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = herm.real();
  out.bottomRightCorner(n, n) = herm.real();
  out.topRightCorner(n, n) = -herm.imag();
  out.bottomLeftCorner(n, n) = herm.imag();
  return 0.5 * out;
}

CMat unembed(const Mat& y, bool complex) {
  if (!complex) return y.cast<cd>();
  const auto n = y.rows() / 2;
  const Mat re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
  const Mat im = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  CMat out(n, n);
  out.real() = re;
  out.imag() = im;
  return hermitianPart(out);
}

Compiled compile(const SdpProblem& p) {
  Compiled cp;
  for (const auto& blk : p.blocks()) {
    cp.dims.push_back(blk.complex ? 2 * blk.dim : blk.dim);
  }
  const int nb = static_cast<int>(cp.dims.size());

  struct Row {
    std::vector<std::pair<int, Mat>> blocks;
    std::vector<std::pair<int, double>> lp;
    double rhs = 0.0;
  };
  std::vector<Row> rows;
  int nlp = 0;

  // Scalars become shifted/split nonnegative lp variables.
  std::vector<Row> boundRows;
  for (const auto& s : p.scalars()) {
    ScalarMap map;
    if (std::isfinite(s.lower)) {
      map.shift = s.lower;
      map.plus = nlp++;
      if (std::isfinite(s.upper)) {
        Row r;
        r.lp = {{map.plus, 1.0}, {nlp++, 1.0}};
        r.rhs = s.upper - s.lower;
        boundRows.push_back(std::move(r));
      }
    } else if (std::isfinite(s.upper)) {
      map.shift = s.upper;
      map.minus = nlp++;
    } else {
      map.plus = nlp++;
      map.minus = nlp++;
    }
    cp.scalarMap.push_back(map);
  }

  auto lower = [&](const AffineExpr& e, Row& r) {
    for (const auto& [idx, mat] : e.blockTerms()) {
      r.blocks.emplace_back(idx, embed(mat, p.blocks()[idx].complex));
    }
    double shift = e.constant();
    for (const auto& [idx, coeff] : e.scalarTerms()) {
      const auto& map = cp.scalarMap[idx];
      shift += coeff * map.shift;
      if (map.plus >= 0) r.lp.emplace_back(map.plus, coeff);
      if (map.minus >= 0) r.lp.emplace_back(map.minus, -coeff);
    }
    return shift;
  };

  for (const auto& con : p.constraints()) {
    Row r;
    const double shift = lower(con.expr, r);
    r.rhs = con.rhs - shift;
    if (con.relation == Relation::kLessEqual) r.lp.emplace_back(nlp++, 1.0);
    if (con.relation == Relation::kGreaterEqual) r.lp.emplace_back(nlp++, -1.0);
    rows.push_back(std::move(r));
  }
  cp.originalRows = static_cast<int>(rows.size());
  for (auto& r : boundRows) rows.push_back(std::move(r));

  cp.nlp = nlp;
  cp.m = static_cast<int>(rows.size());
  cp.blockRows.assign(nb, {});
  cp.alp = Mat::Zero(cp.m, nlp);
  cp.b = Vec::Zero(cp.m);
  cp.rowScale.assign(cp.m, 1.0);
  for (int i = 0; i < cp.m; ++i) {
    auto& r = rows[i];
    for (const auto& [j, v] : r.lp) cp.alp(i, j) += v;
    double norm2 = cp.alp.row(i).squaredNorm();
    for (const auto& [idx, mat] : r.blocks) norm2 += mat.squaredNorm();
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) {
      if (r.rhs != 0.0) cp.trivialInfeasible = true;
      continue;
    }
    cp.rowScale[i] = norm;
    cp.alp.row(i) /= norm;
    cp.b(i) = r.rhs / norm;
    for (auto& [idx, mat] : r.blocks) {
      cp.blockRows[idx].emplace_back(i, mat / norm);
    }
  }

  Row obj;
  cp.objConstant = lower(p.objective(), obj);
  cp.c.resize(nb);
  for (int k = 0; k < nb; ++k) cp.c[k] = Mat::Zero(cp.dims[k], cp.dims[k]);
  for (const auto& [idx, mat] : obj.blocks) cp.c[idx] -= mat;
  cp.clp = Vec::Zero(nlp);
  for (const auto& [j, v] : obj.lp) cp.clp(j) -= v;
  return cp;
}

struct Iterate {
  std::vector<Mat> x, z;
  Vec xlp, zlp, y;
};

double dot(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

Vec applyA(const Compiled& cp, const std::vector<Mat>& x, const Vec& xlp) {
  Vec out = cp.alp * xlp;
  for (std::size_t k = 0; k < cp.blockRows.size(); ++k) {
    for (const auto& [i, a] : cp.blockRows[k]) out(i) += a.cwiseProduct(x[k]).sum();
  }
  return out;
}

void applyAT(const Compiled& cp, const Vec& y, std::vector<Mat>& out,
             Vec& outLp) {
  out.resize(cp.dims.size());
  for (std::size_t k = 0; k < cp.dims.size(); ++k) {
    out[k] = Mat::Zero(cp.dims[k], cp.dims[k]);
    for (const auto& [i, a] : cp.blockRows[k]) out[k] += y(i) * a;
  }
  outLp = cp.alp.transpose() * y;
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

double maxStepPsd(const Mat& x, const Mat& dx) {
  Eigen::LLT<Mat> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const Mat t = llt.matrixL().solve(dx);
  const Mat s = llt.matrixL().solve(t.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(s), Eigen::EigenvaluesOnly);
  const double lam = es.eigenvalues()(0);
  return lam >= 0.0 ? kInf : -1.0 / lam;
}

double maxStepLp(const Vec& x, const Vec& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

double maxStep(const std::vector<Mat>& x, const Vec& xlp,
               const std::vector<Mat>& dx, const Vec& dxlp) {
  double a = maxStepLp(xlp, dxlp);
  for (std::size_t k = 0; k < x.size(); ++k) a = std::min(a, maxStepPsd(x[k], dx[k]));
  return a;
}

}  // namespace

SdpSolution InteriorPointSolver::solve(const SdpProblem& problem,
                                       const Tolerances& tol,
                                       int maxIter) const {
  problem.validate();
  const Compiled cp = compile(problem);
  const int nb = static_cast<int>(cp.dims.size());
  const int m = cp.m;
  const int nlp = cp.nlp;
  double ntot = nlp;
  for (int d : cp.dims) ntot += d;

  SdpSolution sol;
  auto finish = [&](const Iterate& it, SolveStatus status) {
    sol.status = status;
    sol.blocks.clear();
    for (int k = 0; k < nb; ++k) {
      sol.blocks.push_back(unembed(it.x[k], problem.blocks()[k].complex));
    }
    sol.scalars.clear();
    for (const auto& map : cp.scalarMap) {
      double v = map.shift;
      if (map.plus >= 0) v += it.xlp(map.plus);
      if (map.minus >= 0) v -= it.xlp(map.minus);
      sol.scalars.push_back(v);
    }
    sol.duals.assign(cp.originalRows, 0.0);
    for (int i = 0; i < cp.originalRows; ++i) {
      sol.duals[i] = -it.y(i) / cp.rowScale[i];
    }
    sol.objectiveValue = problem.objective().evaluate(sol.blocks, sol.scalars);
    return sol;
  };

  // Numerical breakdown near the solution: accept the iterate when it is
  // within a fixed factor of the requested accuracy.
  auto breakdown = [&](const Iterate& it, const std::string& why) {
    const bool close = sol.dualityGap <= kReducedAccuracy * tol.gap &&
                       sol.primalResidual <= kReducedAccuracy * tol.feas &&
                       sol.dualResidual <= kReducedAccuracy * tol.feas;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s (gap %.2e, pinf %.2e, dinf %.2e)",
                  why.c_str(), sol.dualityGap, sol.primalResidual, sol.dualResidual);
    sol.message = close ? std::string("reduced accuracy: ") + buf : std::string(buf);
    return finish(it, close ? SolveStatus::kOptimal : SolveStatus::kMaxIter);
  };

  // Starting point, scaled to the data.
  double normC = cp.clp.squaredNorm();
  for (const auto& c : cp.c) normC += c.squaredNorm();
  normC = std::sqrt(normC);
  Iterate it;
  it.x.resize(nb);
  it.z.resize(nb);
  for (int k = 0; k < nb; ++k) {
    const double n = cp.dims[k];
    double xi = std::max(10.0, std::sqrt(n));
    double zeta = std::max({10.0, std::sqrt(n), cp.c[k].norm()});
    for (const auto& [i, a] : cp.blockRows[k]) {
      xi = std::max(xi, std::sqrt(n) * (1.0 + std::abs(cp.b(i))) / (1.0 + a.norm()));
      zeta = std::max(zeta, a.norm());
    }
    it.x[k] = xi * Mat::Identity(cp.dims[k], cp.dims[k]);
    it.z[k] = zeta * Mat::Identity(cp.dims[k], cp.dims[k]);
  }
  {
    double xi = 10.0;
    double zeta = std::max(10.0, cp.clp.size() ? cp.clp.cwiseAbs().maxCoeff() : 0.0);
    for (int i = 0; i < m; ++i) {
      xi = std::max(xi, 1.0 + std::abs(cp.b(i)));
    }
    it.xlp = Vec::Constant(nlp, xi);
    it.zlp = Vec::Constant(nlp, zeta);
  }
  it.y = Vec::Zero(m);

  if (cp.trivialInfeasible) {
    sol.message = "constraint with zero coefficients and nonzero right-hand side";
    return finish(it, SolveStatus::kInfeasible);
  }

  const double normB = cp.b.norm();
  constexpr double kInfeasTol = 1e-8;
  int stalls = 0;
  std::vector<Mat> aty;
  Vec atyLp;

  for (int iter = 0;; ++iter) {
    sol.iterations = iter;
    // Residuals and measures.
    const Vec rp = cp.b - applyA(cp, it.x, it.xlp);
    applyAT(cp, it.y, aty, atyLp);
    std::vector<Mat> rd(nb);
    double rdNorm2 = 0.0;
    double atyzNorm2 = 0.0;
    for (int k = 0; k < nb; ++k) {
      rd[k] = cp.c[k] - it.z[k] - aty[k];
      rdNorm2 += rd[k].squaredNorm();
      atyzNorm2 += (aty[k] + it.z[k]).squaredNorm();
    }
    const Vec rdLp = cp.clp - it.zlp - atyLp;
    rdNorm2 += rdLp.squaredNorm();
    atyzNorm2 += (atyLp + it.zlp).squaredNorm();

    const double pobj = dot(cp.c, it.x) + cp.clp.dot(it.xlp);
    const double dobj = cp.b.dot(it.y);
    const double xz = dot(it.x, it.z) + it.xlp.dot(it.zlp);
    const double mu = xz / ntot;
    const double relGap = xz / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pinf = rp.norm() / (1.0 + normB);
    const double dinf = std::sqrt(rdNorm2) / (1.0 + normC);
    sol.dualityGap = relGap;
    sol.primalResidual = pinf;
    sol.dualResidual = dinf;
    sol.meritHistory.push_back(mu + pinf + dinf);

    if (relGap <= tol.gap && pinf <= tol.feas && dinf <= tol.feas) {
      return finish(it, SolveStatus::kOptimal);
    }
    if (dobj > 0.0 && std::sqrt(atyzNorm2) / dobj < kInfeasTol) {
      sol.message = "primal infeasibility certificate";
      return finish(it, SolveStatus::kInfeasible);
    }
    if (pobj < 0.0 && applyA(cp, it.x, it.xlp).norm() / -pobj < kInfeasTol) {
      sol.message = "dual infeasibility certificate";
      return finish(it, SolveStatus::kUnbounded);
    }
    if (iter >= maxIter) {
      sol.message = "iteration limit";
      return finish(it, SolveStatus::kMaxIter);
    }

    // Schur complement of the HKM direction.
    std::vector<Mat> zinv(nb);
    bool ok = true;
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<Mat> llt(it.z[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      zinv[k] = sym(llt.solve(Mat::Identity(cp.dims[k], cp.dims[k])));
    }
    if (!ok) {
      return breakdown(it, "dual slack lost definiteness");
    }
    const Vec ratioLp = it.xlp.cwiseQuotient(it.zlp);
    Mat schur = cp.alp * ratioLp.asDiagonal() * cp.alp.transpose();
    for (int k = 0; k < nb; ++k) {
      const auto& rowsK = cp.blockRows[k];
      for (std::size_t jj = 0; jj < rowsK.size(); ++jj) {
        const Mat pj = it.x[k] * rowsK[jj].second * zinv[k];
        for (std::size_t ii = 0; ii <= jj; ++ii) {
          const double v = rowsK[ii].second.cwiseProduct(pj).sum();
          schur(rowsK[ii].first, rowsK[jj].first) += v;
          if (ii != jj) schur(rowsK[jj].first, rowsK[ii].first) += v;
        }
      }
    }
    schur = sym(schur);
    Eigen::LLT<Mat> schurLlt(schur);
    Eigen::LDLT<Mat> schurLdlt;
    const bool useLdlt = schurLlt.info() != Eigen::Success;
    if (useLdlt) {
      const double reg = 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
      schurLdlt.compute(schur + reg * Mat::Identity(m, m));
    }
    auto solveSchur = [&](const Vec& rhs) -> Vec {
      auto once = [&](const Vec& r) {
        return useLdlt ? Vec(schurLdlt.solve(r)) : Vec(schurLlt.solve(r));
      };
      Vec x = once(rhs);
      // Iterative refinement against the ill-conditioning near the solution.
      for (int pass = 0; pass < 2; ++pass) x += once(rhs - schur * x);
      return x;
    };

    // Direction for a given (G, g): dX = sym(G - X dZ Z^-1), dZ = Rd - A^T dy.
    struct Direction {
      std::vector<Mat> dx, dz;
      Vec dxLp, dzLp, dy;
    };
    auto direction = [&](const std::vector<Mat>& g, const Vec& gLp) {
      std::vector<Mat> h(nb);
      for (int k = 0; k < nb; ++k) h[k] = g[k] - it.x[k] * rd[k] * zinv[k];
      const Vec hLp = gLp - it.xlp.cwiseProduct(rdLp).cwiseQuotient(it.zlp);
      Direction d;
      d.dy = m > 0 ? solveSchur(rp - applyA(cp, h, hLp)) : Vec();
      std::vector<Mat> atdy;
      Vec atdyLp;
      applyAT(cp, d.dy, atdy, atdyLp);
      d.dz.resize(nb);
      d.dx.resize(nb);
      for (int k = 0; k < nb; ++k) {
        d.dz[k] = rd[k] - atdy[k];
        d.dx[k] = sym(g[k] - it.x[k] * d.dz[k] * zinv[k]);
      }
      d.dzLp = rdLp - atdyLp;
      d.dxLp = gLp - it.xlp.cwiseProduct(d.dzLp).cwiseQuotient(it.zlp);
      return d;
    };

    // Predictor.
    std::vector<Mat> g(nb);
    for (int k = 0; k < nb; ++k) g[k] = -it.x[k];
    const Direction pred = direction(g, -it.xlp);
    const double apAff = std::min(1.0, maxStep(it.x, it.xlp, pred.dx, pred.dxLp));
    const double adAff = std::min(1.0, maxStep(it.z, it.zlp, pred.dz, pred.dzLp));
    double xzAff = 0.0;
    for (int k = 0; k < nb; ++k) {
      xzAff += (it.x[k] + apAff * pred.dx[k]).cwiseProduct(it.z[k] + adAff * pred.dz[k]).sum();
    }
    xzAff += (it.xlp + apAff * pred.dxLp).dot(it.zlp + adAff * pred.dzLp);
    const double sigma = std::clamp(std::pow(std::max(xzAff, 0.0) / xz, 3.0), 0.0, 1.0);

    // Corrector.
    for (int k = 0; k < nb; ++k) {
      g[k] = sigma * mu * zinv[k] - it.x[k] - pred.dx[k] * pred.dz[k] * zinv[k];
    }
    const Vec gLp = (Vec::Constant(nlp, sigma * mu) - pred.dxLp.cwiseProduct(pred.dzLp))
                        .cwiseQuotient(it.zlp) - it.xlp;
    const Direction dir = direction(g, gLp);

    const double gamma = 0.9 + 0.09 * std::min(apAff, adAff);
    const double ap = std::min(1.0, gamma * maxStep(it.x, it.xlp, dir.dx, dir.dxLp));
    const double ad = std::min(1.0, gamma * maxStep(it.z, it.zlp, dir.dz, dir.dzLp));
    if (!(std::min(ap, ad) > 1e-8)) {
      if (++stalls >= 3) {
        return breakdown(it, "step length stalled");
      }
    } else {
      stalls = 0;
    }
    for (int k = 0; k < nb; ++k) {
      it.x[k] = sym(it.x[k] + ap * dir.dx[k]);
      it.z[k] = sym(it.z[k] + ad * dir.dz[k]);
    }
    it.xlp += ap * dir.dxLp;
    it.zlp += ad * dir.dzLp;
    if (m > 0) it.y += ad * dir.dy;
  }
}

}  // namespace mfris::sdp
