#include "doctest.h"

#include <numbers>

#include "tsd/linalg.hpp"

using namespace tsd;

namespace {

CMatrixXd diag2(double a, double b) {
  CMatrixXd m = CMatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("hermitian check is relative to the largest entry") {
  CMatrixXd m(2, 2);
  m << 1.0, cdouble(0.0, 2.0), cdouble(0.0, -2.0), 3.0;
  CHECK(is_hermitian(m));
  m(0, 1) += 1e-6;
  CHECK_FALSE(is_hermitian(m));
  CHECK_FALSE(is_hermitian(CMatrixXd::Zero(2, 3)));
}

TEST_CASE("validate_psd accepts semidefinite and rejects indefinite input") {
  CHECK(validate_psd(diag2(1.0, 0.0)));
  CHECK(validate_psd(CMatrixXd::Zero(3, 3)));
  CHECK_FALSE(validate_psd(diag2(1.0, -0.1)));
  CMatrixXd not_hermitian(2, 2);
  not_hermitian << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_AS(validate_psd(not_hermitian), Error);
}

TEST_CASE("matrix_sqrt_psd reproduces the matrix on both factorization paths") {
  CMatrixXd pd(2, 2);
  pd << 2.0, cdouble(0.5, 0.5), cdouble(0.5, -0.5), 1.0;
  const CMatrixXd f = matrix_sqrt_psd(pd);
  CHECK((f * f.adjoint() - pd).cwiseAbs().maxCoeff() < 1e-12);

  // Rank one: Cholesky breaks down and the eigen path takes over.
  CVectorXd v(3);
  v << 1.0, cdouble(0.0, 1.0), 2.0;
  const CMatrixXd rank1 = v * v.adjoint();
  const CMatrixXd g = matrix_sqrt_psd(rank1);
  CHECK((g * g.adjoint() - rank1).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(matrix_sqrt_psd(diag2(1.0, -1.0)), Error);
}

TEST_CASE("rotation matrices are unitary with the documented columns") {
  const double t = 0.3;
  const CMatrixXd r = rotation(t);
  CHECK(is_unitary(r));
  CHECK(r(0, 0).real() == doctest::Approx(std::cos(t)));
  CHECK(r(1, 0).real() == doctest::Approx(std::sin(t)));
  CHECK(r(0, 1).real() == doctest::Approx(-std::sin(t)));
  CHECK((rotation(0.0) - CMatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all_finite flags NaN and infinity in either part") {
  CMatrixXd m = CMatrixXd::Identity(2, 2);
  CHECK(all_finite(m));
  m(1, 0) = cdouble(0.0, std::numeric_limits<double>::infinity());
  CHECK_FALSE(all_finite(m));
}
