#include "mfris/sdp_problem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mfris::sdp {

AffineExpr& AffineExpr::addTrace(BlockId block, const CMat& coeff) {
  if (block.index < 0) throw std::invalid_argument("AffineExpr: bad block id");
  if (coeff.rows() != coeff.cols()) {
    throw std::invalid_argument("AffineExpr: coefficient matrix not square");
  }
  const CMat herm = hermitianPart(coeff);
  for (auto& [idx, mat] : blocks_) {
    if (idx == block.index) {
      if (mat.rows() != herm.rows()) {
        throw std::invalid_argument("AffineExpr: dimension mismatch");
      }
      mat += herm;
      return *this;
    }
  }
  blocks_.emplace_back(block.index, herm);
  return *this;
}

AffineExpr& AffineExpr::addEntry(BlockId block, int row, int col,
                                 double weight, Eigen::Index dim) {
  CMat e = CMat::Zero(dim, dim);
  if (row == col) {
    e(row, row) = weight;
  } else {
    e(row, col) = 0.5 * weight;
    e(col, row) = 0.5 * weight;
  }
  return addTrace(block, e);
}

AffineExpr& AffineExpr::add(ScalarId var, double coeff) {
  if (var.index < 0) throw std::invalid_argument("AffineExpr: bad scalar id");
  for (auto& [idx, c] : scalars_) {
    if (idx == var.index) {
      c += coeff;
      return *this;
    }
  }
  scalars_.emplace_back(var.index, coeff);
  return *this;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  for (const auto& [idx, mat] : other.blocks_) addTrace(BlockId{idx}, mat);
  for (const auto& [idx, c] : other.scalars_) add(ScalarId{idx}, c);
  constant_ += other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double factor) {
  for (auto& [idx, mat] : blocks_) mat *= factor;
  for (auto& [idx, c] : scalars_) c *= factor;
  constant_ *= factor;
  return *this;
}

double AffineExpr::evaluate(const std::vector<CMat>& blocks,
                            const std::vector<double>& scalars) const {
  double v = constant_;
  for (const auto& [idx, mat] : blocks_) {
    v += (mat.cwiseProduct(blocks.at(idx).transpose())).sum().real();
  }
  for (const auto& [idx, c] : scalars_) v += c * scalars.at(idx);
  return v;
}

AffineExpr assembleLifted(const CMat& quadForm, BlockId block) {
  AffineExpr e;
  e.addTrace(block, quadForm);
  return e;
}

BlockId SdpProblem::addPsdBlock(std::string name, int dim, bool complex) {
  if (dim < 1) throw std::invalid_argument("SdpProblem: block dimension < 1");
  blocks_.push_back({std::move(name), dim, complex});
  return BlockId{static_cast<int>(blocks_.size()) - 1};
}

ScalarId SdpProblem::addScalar(std::string name, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("SdpProblem: lower > upper");
  scalars_.push_back({std::move(name), lower, upper});
  return ScalarId{static_cast<int>(scalars_.size()) - 1};
}

void SdpProblem::addConstraint(AffineExpr expr, Relation relation, double rhs,
                               std::string label) {
  constraints_.push_back({std::move(expr), relation, rhs, std::move(label)});
}

namespace {

void checkExpr(const AffineExpr& e, const std::vector<PsdBlock>& blocks,
               std::size_t scalarCount, const std::string& where) {
  for (const auto& [idx, mat] : e.blockTerms()) {
    if (idx < 0 || idx >= static_cast<int>(blocks.size())) {
      throw std::invalid_argument(where + ": unknown block");
    }
    if (mat.rows() != blocks[idx].dim) {
      throw std::invalid_argument(where + ": dimension mismatch on block " +
                                  blocks[idx].name);
    }
    if (!mat.allFinite()) throw std::invalid_argument(where + ": non-finite");
    if (!blocks[idx].complex && mat.imag().cwiseAbs().maxCoeff() > 0.0) {
      throw std::invalid_argument(where + ": complex data on real block " +
                                  blocks[idx].name);
    }
  }
  for (const auto& [idx, c] : e.scalarTerms()) {
    if (idx < 0 || idx >= static_cast<int>(scalarCount)) {
      throw std::invalid_argument(where + ": unknown scalar");
    }
    if (!std::isfinite(c)) throw std::invalid_argument(where + ": non-finite");
  }
  if (!std::isfinite(e.constant())) {
    throw std::invalid_argument(where + ": non-finite constant");
  }
}

}  // namespace

void SdpProblem::validate() const {
  checkExpr(objective_, blocks_, scalars_.size(), "objective");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    checkExpr(c.expr, blocks_, scalars_.size(),
              "constraint " + std::to_string(i) +
                  (c.label.empty() ? "" : " (" + c.label + ")"));
    if (!std::isfinite(c.rhs)) {
      throw std::invalid_argument("constraint rhs not finite");
    }
  }
}

void SdpProblem::writeTriplets(std::ostream& os) const {
  auto dump = [&](std::size_t con, const AffineExpr& e) {
    for (const auto& [idx, mat] : e.blockTerms()) {
      for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        for (Eigen::Index c = r; c < mat.cols(); ++c) {
          if (mat(r, c) != cd(0.0)) {
            os << con << ' ' << blocks_[idx].name << ' ' << r << ' ' << c
               << ' ' << mat(r, c).real() << ' ' << mat(r, c).imag() << '\n';
          }
        }
      }
    }
    for (const auto& [idx, c] : e.scalarTerms()) {
      os << con << " s" << idx << " 0 0 " << c << " 0\n";
    }
  };
  os.precision(17);
  dump(0, objective_);
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    dump(i + 1, constraints_[i].expr);
    const char* rel = constraints_[i].relation == Relation::kEqual       ? "="
                      : constraints_[i].relation == Relation::kLessEqual ? "<="
                                                                          : ">=";
    os << i + 1 << " rhs " << rel << " 0 "
       << constraints_[i].rhs - constraints_[i].expr.constant() << " 0\n";
  }
}

const char* statusName(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kMaxIter: return "maxIter";
  }
  return "unknown";
}

double maxConstraintViolation(const SdpProblem& problem,
                              const std::vector<CMat>& blocks,
                              const std::vector<double>& scalars) {
  double worst = 0.0;
  for (const auto& c : problem.constraints()) {
    const double lhs = c.expr.evaluate(blocks, scalars);
    double v = 0.0;
    switch (c.relation) {
      case Relation::kEqual: v = std::abs(lhs - c.rhs); break;
      case Relation::kLessEqual: v = lhs - c.rhs; break;
      case Relation::kGreaterEqual: v = c.rhs - lhs; break;
    }
    worst = std::max(worst, v);
  }
  for (std::size_t i = 0; i < problem.scalars().size(); ++i) {
    worst = std::max(worst, problem.scalars()[i].lower - scalars.at(i));
    worst = std::max(worst, scalars.at(i) - problem.scalars()[i].upper);
  }
  return worst;
}

SdpSolution solveSdp(const SdpProblem& problem, const Tolerances& tol,
                     int maxIter) {
  return InteriorPointSolver{}.solve(problem, tol, maxIter);
}

}  // namespace mfris::sdp
