#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace mfris {

using cd = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using CRowVec = Eigen::RowVectorXcd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2e = 1.44269504088896340736;

inline double dbToLinear(double db) { return std::pow(10.0, db / 10.0); }

/// Leading eigenpair of a Hermitian matrix. A zero matrix yields the first
/// standard basis vector with eigenvalue 0.
struct EigenPair {
  double value = 0.0;
  CVec vector;
};
EigenPair leadingEigenpair(const CMat& hermitian);

/// Sum of eigenvalue magnitudes (nuclear norm of a Hermitian matrix).
double nuclearNorm(const CMat& hermitian);
/// Largest eigenvalue magnitude (spectral norm of a Hermitian matrix).
double spectralNorm(const CMat& hermitian);
/// ||X||_* - ||X||_2, zero exactly for rank-one PSD matrices.
double rankOneViolation(const CMat& hermitian);

double minEigenvalue(const CMat& hermitian);

inline CMat hermitianPart(const CMat& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace mfris
