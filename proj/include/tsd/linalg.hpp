#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "tsd/error.hpp"

namespace tsd {

template <typename Scalar>
using Complex = std::complex<Scalar>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CVector = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using cdouble = Complex<double>;
using CMatrixXd = CMatrix<double>;
using CVectorXd = CVector<double>;

/// Tolerance used for Hermitian symmetry checks on model inputs.
inline constexpr double kHermitianTol = 1e-12;
/// Relative tolerance of the positive-semidefinite test.
inline constexpr double kPsdTol = 1e-10;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto v = m(i, j);
      if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v))) return false;
    }
  return true;
}

/// Symmetry relative to the largest entry: max|m - m^dagger| <= tol * max(1, max|m|).
template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m,
                  typename Eigen::NumTraits<typename Derived::Scalar>::Real tol = kHermitianTol) {
  if (m.rows() != m.cols()) return false;
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Real scale = std::max<Real>(Real(1), m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

template <typename Derived>
auto hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> solver(m.eval(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().eval();
}

/// True iff the smallest eigenvalue is >= -rel_tol * max|eigenvalue|.
/// Throws NotHermitian when `m` is not Hermitian within `rel_tol`.
template <typename Derived>
bool validate_psd(const Eigen::MatrixBase<Derived>& m,
                  typename Eigen::NumTraits<typename Derived::Scalar>::Real rel_tol = kPsdTol) {
  if (!is_hermitian(m, rel_tol)) throw Error(Errc::not_hermitian, "matrix is not Hermitian");
  if (m.size() == 0) return true;
  const auto ev = hermitian_eigenvalues(m);
  const auto largest = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -rel_tol * largest;
}

/// Square-root factor F with F * F^dagger = m. Positive definite input goes through
/// Cholesky; semidefinite input falls back to an eigendecomposition with negative
/// eigenvalues clipped to zero.
template <typename Derived>
typename Derived::PlainObject matrix_sqrt_psd(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (!validate_psd(m)) throw Error(Errc::not_psd, "matrix has a significantly negative eigenvalue");

  Eigen::LLT<Plain> llt(m.eval());
  if (llt.info() == Eigen::Success) {
    Plain lower = llt.matrixL();
    const Real tiny = std::numeric_limits<Real>::epsilon() * std::max<Real>(Real(1), m.cwiseAbs().maxCoeff());
    if ((lower.diagonal().cwiseAbs().array() > tiny).all()) return lower;
  }
  Eigen::SelfAdjointEigenSolver<Plain> solver(m.eval());
  const auto clipped = solver.eigenvalues().cwiseMax(Real(0)).cwiseSqrt().template cast<typename Derived::Scalar>();
  return solver.eigenvectors() * clipped.asDiagonal();
}

/// Columns are the rotated basis vectors e_+ = (cos t, sin t), e_- = (-sin t, cos t).
template <typename Scalar>
CMatrix<Scalar> rotation(Scalar theta) {
  CMatrix<Scalar> r(2, 2);
  const Scalar c = std::cos(theta), s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& u,
                typename Eigen::NumTraits<typename Derived::Scalar>::Real tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  using Plain = typename Derived::PlainObject;
  return ((u.adjoint() * u).eval() - Plain::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace tsd
