#include "mfris/linalg.hpp"

namespace mfris {

EigenPair leadingEigenpair(const CMat& hermitian) {
  const auto n = hermitian.rows();
  EigenPair out;
  out.vector = CVec::Zero(n);
  if (n == 0) return out;
  if (hermitian.cwiseAbs().maxCoeff() == 0.0) {
    out.vector(0) = 1.0;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitianPart(hermitian));
  out.value = es.eigenvalues()(n - 1);
  out.vector = es.eigenvectors().col(n - 1);
  return out;
}

double nuclearNorm(const CMat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitianPart(hermitian),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double spectralNorm(const CMat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitianPart(hermitian),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double rankOneViolation(const CMat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitianPart(hermitian),
                                         Eigen::EigenvaluesOnly);
  const Vec mags = es.eigenvalues().cwiseAbs();
  return mags.sum() - mags.maxCoeff();
}

double minEigenvalue(const CMat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitianPart(hermitian),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace mfris
