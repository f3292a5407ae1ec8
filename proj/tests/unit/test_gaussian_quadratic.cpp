#include "doctest.h"

#include <cmath>

#include "tsd/error.hpp"
#include "tsd/gaussian_quadratic.hpp"
#include "tsd/rng.hpp"

using namespace tsd;

namespace {

CMatrixXd random_matrix(RngStream& rng, Eigen::Index d) {
  CMatrixXd x(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) x(i, j) = rng.complex_normal();
  return x;
}

CMatrixXd random_psd(RngStream& rng, Eigen::Index d) {
  const CMatrixXd x = random_matrix(rng, d);
  const CMatrixXd p = x * x.adjoint() / static_cast<double>(d);
  return (p + p.adjoint()) / 2.0;
}

CMatrixXd random_hermitian(RngStream& rng, Eigen::Index d) {
  const CMatrixXd x = random_matrix(rng, d);
  return (x + x.adjoint()) / 2.0;
}

CMatrixXd diag(double a, double b) {
  CMatrixXd m = CMatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Direct evaluation of the two-point formula with explicit products.
double reference_correlation(const CMatrixXd& d, const CMatrixXd& a1, const CMatrixXd& a2) {
  return (d * a1).trace().real() * (d * a2).trace().real() + (d * a2 * d * a1).trace().real();
}

}  // namespace

TEST_CASE("quadratic mean examples") {
  const GaussianLaw identity(CMatrixXd::Identity(2, 2));
  CHECK(quadratic_mean(identity, QuadraticForm(diag(1, 2))) == doctest::Approx(3.0));
  CHECK(quadratic_mean(identity, QuadraticForm(CMatrixXd::Zero(2, 2))) == 0.0);

  CVectorXd g(3);
  g << 0.6, cdouble(0.0, 0.8), 0.0;
  CVectorXd h(3);
  h << cdouble(0.0, 1.0), 0.0, 0.0;
  const GaussianLaw rank_one(g * g.adjoint());
  CHECK(quadratic_mean(rank_one, QuadraticForm(g * g.adjoint())) == doctest::Approx(1.0));
  CHECK(quadratic_mean(rank_one, QuadraticForm(h * h.adjoint())) == doctest::Approx(std::norm(h.dot(g))));
  CHECK_THROWS_AS(quadratic_mean(identity, QuadraticForm(CMatrixXd::Identity(3, 3))), Error);
}

TEST_CASE("quadratic correlation examples") {
  for (Eigen::Index d : {1, 2, 5}) {
    const GaussianLaw law(CMatrixXd::Identity(d, d));
    const QuadraticForm a(CMatrixXd::Identity(d, d));
    CHECK(quadratic_correlation(law, a, a) == doctest::Approx(static_cast<double>(d * d + d)));
  }
  const GaussianLaw law(CMatrixXd::Identity(2, 2));
  CHECK(quadratic_correlation(law, QuadraticForm(diag(1, 2)), QuadraticForm(CMatrixXd::Zero(2, 2))) == 0.0);

  RngStream rng(1, stream_key({90}), 0);
  const CMatrixXd d = random_psd(rng, 4), a1 = random_hermitian(rng, 4), a2 = random_hermitian(rng, 4);
  CHECK(quadratic_correlation(GaussianLaw(d), QuadraticForm(a1), QuadraticForm(a2)) ==
        doctest::Approx(reference_correlation(d, a1, a2)).epsilon(1e-12));
}

TEST_CASE("linearity and symmetry on random triples") {
  for (std::uint64_t k = 0; k < 30; ++k) {
    RngStream rng(2, stream_key({91}), k);
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(k % 8);
    const CMatrixXd d1 = random_psd(rng, dim), d2 = random_psd(rng, dim);
    const CMatrixXd a = random_hermitian(rng, dim), b = random_hermitian(rng, dim);
    const double alpha = 0.7, beta = -1.3;
    const GaussianLaw law1(d1), law2(d2);
    const double lin_a = quadratic_mean(law1, QuadraticForm(alpha * a + beta * b)) -
                         (alpha * quadratic_mean(law1, QuadraticForm(a)) + beta * quadratic_mean(law1, QuadraticForm(b)));
    CHECK(std::abs(lin_a) < 1e-10);
    const double lin_d = quadratic_mean(GaussianLaw(0.4 * d1 + 2.5 * d2), QuadraticForm(a)) -
                         (0.4 * quadratic_mean(law1, QuadraticForm(a)) + 2.5 * quadratic_mean(law2, QuadraticForm(a)));
    CHECK(std::abs(lin_d) < 1e-10);
    const double sym = quadratic_correlation(law1, QuadraticForm(a), QuadraticForm(b)) -
                       quadratic_correlation(law1, QuadraticForm(b), QuadraticForm(a));
    CHECK(std::abs(sym) < 1e-10);
  }
}

TEST_CASE("block correlation matches the embedded full-space formula") {
  for (std::uint64_t k = 0; k < 30; ++k) {
    RngStream rng(3, stream_key({92}), k);
    const Eigen::Index d1 = 1 + static_cast<Eigen::Index>(k % 4), d2 = 1 + static_cast<Eigen::Index>((k / 4) % 4);
    const GaussianLaw law(random_psd(rng, d1 + d2), d1);
    const QuadraticForm a1(random_hermitian(rng, d1)), a2(random_hermitian(rng, d2));
    const double block = quadratic_correlation_block(law, a1, a2);
    const double full = quadratic_correlation(law, embed_block(a1, d1, d2, 1), embed_block(a2, d1, d2, 2));
    CHECK(std::abs(block - full) < 1e-10 * std::max(1.0, std::abs(full)));
  }
}

TEST_CASE("independent blocks factorize") {
  RngStream rng(4, stream_key({93}), 0);
  CMatrixXd d = CMatrixXd::Zero(5, 5);
  d.topLeftCorner(2, 2) = random_psd(rng, 2);
  d.bottomRightCorner(3, 3) = random_psd(rng, 3);
  const GaussianLaw law(d, 2);
  const QuadraticForm a1(random_hermitian(rng, 2)), a2(random_hermitian(rng, 3));
  const double product = (law.block(1, 1) * a1.matrix()).trace().real() * (law.block(2, 2) * a2.matrix()).trace().real();
  CHECK(quadratic_correlation_block(law, a1, a2) == doctest::Approx(product).epsilon(1e-12));
}

TEST_CASE("scalar joint-detection blocks give the cross term 4 E0 sigma^2") {
  // Window of K bins, g = uniform unit vector, D11 = D22 = (sigma^2 s + E0) I,
  // D12 = 2 sqrt(E0) sigma12 sqrt(s) I at s = 1.
  const Eigen::Index k = 4;
  const double e0 = 25.0, s = 1.0;
  const cdouble sigma12(0.6, 0.8);
  const double power = std::norm(sigma12);
  const cdouble c = 2.0 * std::sqrt(e0) * sigma12 * std::sqrt(s);
  CMatrixXd d = CMatrixXd::Zero(2 * k, 2 * k);
  d.topLeftCorner(k, k) = CMatrixXd::Identity(k, k) * (power * s + e0);
  d.bottomRightCorner(k, k) = CMatrixXd::Identity(k, k) * (power * s + e0);
  d.topRightCorner(k, k) = CMatrixXd::Identity(k, k) * c;
  d.bottomLeftCorner(k, k) = CMatrixXd::Identity(k, k) * std::conj(c);
  // |c| <= sigma^2 s + E0 keeps the law PSD: 2 * 5 * 1 = 10 <= 26.
  const GaussianLaw law(d, k);
  const CVectorXd g = CVectorXd::Constant(k, 1.0 / std::sqrt(static_cast<double>(k)));
  const QuadraticForm a(g * g.adjoint());
  const double j1 = (power * s + e0) * (power * s + e0);
  const double j2 = quadratic_correlation_block(law, a, a) - j1;
  CHECK(j2 == doctest::Approx(4.0 * e0 * power));
}

TEST_CASE("Monte Carlo targets") {
  const GaussianLaw law(CMatrixXd::Identity(2, 2));
  const auto mean = mc_quadratic_mean(law, QuadraticForm(diag(1, 2)), 1000000, 5);
  CHECK(std::abs(mean.value - 3.0) < 3.0 * mean.standard_error);
  const QuadraticForm id(CMatrixXd::Identity(2, 2));
  const auto corr = mc_quadratic_correlation(law, id, id, 1000000, 6);
  CHECK(std::abs(corr.value - 6.0) < 3.0 * corr.standard_error);
}

TEST_CASE("Monte Carlo agrees with the analytic correlation at d = 4 and d = 8") {
  for (Eigen::Index d : {4, 8}) {
    RngStream rng(7, stream_key({94}), static_cast<std::uint64_t>(d));
    const GaussianLaw law(random_psd(rng, d));
    const QuadraticForm a1(random_hermitian(rng, d)), a2(random_hermitian(rng, d));
    const double exact = quadratic_correlation(law, a1, a2);
    const auto mc = mc_quadratic_correlation(law, a1, a2, 1000000, 8 + static_cast<std::uint64_t>(d));
    CHECK(std::abs(mc.value - exact) < 3.0 * mc.standard_error);
  }
}

TEST_CASE("Monte Carlo convergence over randomized cases") {
  int passes = 0;
  const int cases = 100;
  for (int k = 0; k < cases; ++k) {
    RngStream rng(9, stream_key({95}), static_cast<std::uint64_t>(k));
    const Eigen::Index d = 1 + k % 8;
    const GaussianLaw law(random_psd(rng, d));
    const QuadraticForm a(random_hermitian(rng, d));
    const auto mc = mc_quadratic_mean(law, a, 100000, 1000 + static_cast<std::uint64_t>(k));
    if (std::abs(mc.value - quadratic_mean(law, a)) <= 3.0 * mc.standard_error) ++passes;
  }
  CHECK(passes >= 99);
}

TEST_CASE("Monte Carlo results do not depend on the worker count") {
  RngStream rng(10, stream_key({96}), 0);
  const GaussianLaw law(random_psd(rng, 3));
  const QuadraticForm a(random_hermitian(rng, 3));
  const auto one = mc_quadratic_mean(law, a, 50000, 3, 1);
  const auto four = mc_quadratic_mean(law, a, 50000, 3, 4);
  CHECK(one.value == four.value);
  CHECK(one.standard_error == four.standard_error);
}

TEST_CASE("invalid laws, forms and partitions") {
  CHECK_THROWS_WITH_AS(GaussianLaw(diag(1.0, -0.5)), doctest::Contains("NotPSD"), Error);
  CHECK_THROWS_AS(GaussianLaw(CMatrixXd::Identity(65, 65)), Error);
  CHECK_THROWS_WITH_AS(GaussianLaw(CMatrixXd::Identity(3, 3), 3), doctest::Contains("BadPartition"), Error);
  CMatrixXd skew = CMatrixXd::Zero(2, 2);
  skew(0, 1) = 1.0;
  CHECK_THROWS_WITH_AS(QuadraticForm{skew}, doctest::Contains("NotHermitian"), Error);
  const GaussianLaw unsplit(CMatrixXd::Identity(3, 3));
  const QuadraticForm one(CMatrixXd::Identity(1, 1)), two(CMatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(quadratic_correlation_block(unsplit, one, two), Error);
  const GaussianLaw split(CMatrixXd::Identity(3, 3), 1);
  CHECK_THROWS_AS(quadratic_correlation_block(split, two, one), Error);
  CHECK_THROWS_AS(mc_quadratic_mean(split, QuadraticForm(CMatrixXd::Identity(3, 3)), 10, 1), Error);
}
