#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mfris/linalg.hpp"

namespace mfris::sdp {

struct BlockId {
  int index = -1;
};
struct ScalarId {
  int index = -1;
};

/// Affine functional over PSD blocks and scalars:
///   sum_b Re Tr(C_b X_b) + sum_s a_s x_s + constant.
/// Coefficient matrices are replaced by their Hermitian part.
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  /// Adds Re Tr(coeff * X_block).
  AffineExpr& addTrace(BlockId block, const CMat& coeff);
  /// Adds weight * Re X_block(row, col).
  AffineExpr& addEntry(BlockId block, int row, int col, double weight,
                       Eigen::Index dim);
  AffineExpr& add(ScalarId var, double coeff);
  AffineExpr& addConstant(double c) {
    constant_ += c;
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator*=(double factor);

  const std::vector<std::pair<int, CMat>>& blockTerms() const { return blocks_; }
  const std::vector<std::pair<int, double>>& scalarTerms() const { return scalars_; }
  double constant() const { return constant_; }

  double evaluate(const std::vector<CMat>& blocks,
                  const std::vector<double>& scalars) const;

 private:
  std::vector<std::pair<int, CMat>> blocks_;
  std::vector<std::pair<int, double>> scalars_;
  double constant_ = 0.0;
};

/// Tr(quadForm * X_block) as an affine term. Throws std::invalid_argument on
/// a non-square form.
AffineExpr assembleLifted(const CMat& quadForm, BlockId block);

enum class Relation { kEqual, kLessEqual, kGreaterEqual };

struct Constraint {
  AffineExpr expr;
  Relation relation = Relation::kEqual;
  double rhs = 0.0;
  std::string label;
};

struct PsdBlock {
  std::string name;
  int dim = 0;
  bool complex = true;
};

struct ScalarVar {
  std::string name;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

/// Maximize an affine objective over PSD blocks and bounded scalars subject
/// to affine equalities and inequalities. Immutable once handed to a solver.
class SdpProblem {
 public:
  BlockId addPsdBlock(std::string name, int dim, bool complex = true);
  ScalarId addScalar(std::string name,
                     double lower = 0.0,
                     double upper = std::numeric_limits<double>::infinity());

  void addConstraint(AffineExpr expr, Relation relation, double rhs,
                     std::string label = {});
  void setObjective(AffineExpr objective) { objective_ = std::move(objective); }

  const std::vector<PsdBlock>& blocks() const { return blocks_; }
  const std::vector<ScalarVar>& scalars() const { return scalars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const AffineExpr& objective() const { return objective_; }

  /// Throws std::invalid_argument on dimension mismatches or non-finite data.
  void validate() const;

  /// Plain-text sparse triplet dump, one nonzero per line:
  ///   <con> <block> <row> <col> <re> <im>
  /// con = 0 is the objective, 1..m the constraints; scalar coefficients use
  /// block "s<index>" with row = col = 0, right-hand sides use block "rhs".
  void writeTriplets(std::ostream& os) const;

 private:
  std::vector<PsdBlock> blocks_;
  std::vector<ScalarVar> scalars_;
  std::vector<Constraint> constraints_;
  AffineExpr objective_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kMaxIter };

const char* statusName(SolveStatus s);

struct SdpSolution {
  SolveStatus status = SolveStatus::kMaxIter;
  std::vector<CMat> blocks;
  std::vector<double> scalars;
  /// Multipliers per constraint, sign convention of the maximization:
  /// objective gradient = sum_i dual_i * constraint gradient_i.
  std::vector<double> duals;
  double objectiveValue = 0.0;
  double dualityGap = 0.0;        // relative
  double primalResidual = 0.0;    // relative, after row normalization
  double dualResidual = 0.0;
  int iterations = 0;
  /// Per-iteration mu + relative residuals; diagnostic only.
  std::vector<double> meritHistory;
  std::string message;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct Tolerances {
  double gap = 1e-7;
  double feas = 1e-8;
};

/// Seam for substituting another conic backend behind the same contract.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual SdpSolution solve(const SdpProblem& problem, const Tolerances& tol,
                            int maxIter) const = 0;
};

/// Dense primal-dual path-following method (HKM direction with
/// Mehrotra predictor-corrector) on the real embedding of each block.
class InteriorPointSolver final : public ConicSolver {
 public:
  SdpSolution solve(const SdpProblem& problem, const Tolerances& tol,
                    int maxIter) const override;
};

/// Convenience wrapper around InteriorPointSolver.
SdpSolution solveSdp(const SdpProblem& problem, const Tolerances& tol = {},
                     int maxIter = 200);

/// Largest violation of any constraint at a primal point, in the units of
/// the problem (no normalization). Negative lower-bound excess counts too.
double maxConstraintViolation(const SdpProblem& problem,
                              const std::vector<CMat>& blocks,
                              const std::vector<double>& scalars);

}  // namespace mfris::sdp
