#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

namespace hbf {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

namespace detail {

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Eigendecomposition of the Hermitian part of `a`, eigenvalues sorted descending.
struct SortedEigen {
  RVector values;
  CMatrix vectors;
};

inline SortedEigen sorted_eigen(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  // Eigen returns ascending order.
  const Eigen::Index n = a.rows();
  SortedEigen out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues are clipped to zero.
inline CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  RVector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_eigenvalue(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Rotates `z` onto the non-negative real axis: returns e^{-j arg z}, or 1 for z == 0.
inline Complex unit_phase_conj(Complex z) {
  const double r = std::abs(z);
  return r > 0.0 ? std::conj(z) / r : Complex(1.0, 0.0);
}

}  // namespace detail
}  // namespace hbf
