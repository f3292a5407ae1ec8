#include "doctest.h"

#include <numbers>

#include "tsd/prequantum_model.hpp"
#include "tsd/rng.hpp"

using namespace tsd;

namespace {

CMatrixXd random_matrix(RngStream& rng, Eigen::Index m) {
  CMatrixXd x(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) x(i, j) = rng.complex_normal();
  return x;
}

double max_gap(const CMatrixXd& a, const CMatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("single signal spec validates its power matrix") {
  CMatrixXd b = CMatrixXd::Zero(2, 2);
  b(0, 0) = 0.3;
  b(1, 1) = 0.7;
  const SingleSignalSpec spec(b, 0.0);
  CHECK(spec.channels() == 2);
  CHECK(spec.background_energy() == 0.0);

  CMatrixXd indefinite = b;
  indefinite(1, 1) = -0.7;
  CHECK_THROWS_AS(SingleSignalSpec(indefinite, 0.0), Error);
  CHECK_THROWS_AS(SingleSignalSpec(CMatrixXd::Zero(2, 2), 0.0), Error);
  CHECK_THROWS_AS(SingleSignalSpec(b, -1.0), Error);

  // Basis change U^dagger B U.
  const CMatrixXd u = rotation(std::numbers::pi / 4);
  const CMatrixXd rotated = spec.power_in_basis(u);
  CHECK(rotated(0, 0).real() == doctest::Approx(0.5));
  CHECK(rotated(0, 1).real() == doctest::Approx(0.2));
}

TEST_CASE("matrix-matched model side powers") {
  CMatrixXd s(2, 2);
  s << 1.0, cdouble(0.0, 2.0), 0.5, cdouble(-1.0, 1.0);
  const auto model = build_matrix_model<double>(s, 1.0);
  CHECK(model.mode() == MatchingMode::matrix_matched);
  CHECK(max_gap(model.side_power(1), s * s.adjoint()) < 1e-14);
  CHECK(max_gap(model.side_power(2), s.adjoint() * s) < 1e-14);
  CHECK(model.total_cross_power() == doctest::Approx(s.squaredNorm()));
  const auto [p1, p2] = model.pair_powers(0, 1);
  CHECK(p1 == doctest::Approx((s * s.adjoint())(0, 0).real()));
  CHECK(p2 == doctest::Approx((s.adjoint() * s)(1, 1).real()));
}

TEST_CASE("model builders reject invalid input") {
  CHECK_THROWS_WITH_AS(build_matrix_model<double>(CMatrixXd::Zero(2, 2), 1.0), doctest::Contains("AllZeroCrossMatrix"),
                       Error);
  CMatrixXd nan = CMatrixXd::Identity(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_matrix_model<double>(nan, 1.0), Error);
  CHECK_THROWS_WITH_AS(build_scalar_pair_model<double>(cdouble(1.0, 0.0), 0.0), doctest::Contains("ZeroBackground"),
                       Error);
  CHECK_THROWS_WITH_AS(build_scalar_pair_model<double>(cdouble(0.0, 0.0), 1.0), doctest::Contains("ZeroCross"), Error);
  // E0 = 0 is a valid matrix model, just not usable for joint detection.
  CHECK_FALSE(build_matrix_model<double>(CMatrixXd::Identity(2, 2), 0.0).joint_detection_allowed());
}

TEST_CASE("singlet model and basis rotation") {
  const auto singlet = singlet_model(25.0, 1.0);
  const double a = 1.0 / std::sqrt(2.0);
  CHECK(singlet.cross()(0, 1).real() == doctest::Approx(a));
  CHECK(singlet.cross()(1, 0).real() == doctest::Approx(-a));
  CHECK(max_gap(singlet.side_power(1), CMatrixXd::Identity(2, 2) * 0.5) < 1e-15);

  // Rotating both sides by the same angle leaves the singlet unchanged.
  const auto same = rotate_bases(singlet, 0.37, 0.37);
  CHECK(max_gap(same.cross(), singlet.cross()) < 1e-14);

  // theta2 = pi/8: sigma12'(++) = sin(pi/8) / sqrt2.
  const auto r = rotate_bases(singlet, 0.0, std::numbers::pi / 8);
  CHECK(std::norm(r.cross()(0, 0)) == doctest::Approx(0.5 * std::pow(std::sin(std::numbers::pi / 8), 2)));
}

TEST_CASE("per-bin covariance blocks") {
  CMatrixXd s(2, 2);
  s << 0.3, 0.0, 0.0, 0.7;
  const auto model = build_matrix_model<double>(s, 4.0);
  const auto c = per_bin_covariance(model, 2.0);
  CHECK(c.time == 2.0);
  CHECK(c.matrix(0, 0).real() == doctest::Approx(0.09 * 2.0 + 4.0));
  CHECK(c.matrix(0, 2).real() == doctest::Approx(2.0 * 2.0 * 0.3 * std::sqrt(2.0)));
  CHECK(is_hermitian(c.matrix));

  const auto pair = pair_covariance(model, 1, 1, 2.0);
  CHECK(pair(0, 0).real() == doctest::Approx(0.49 * 2.0 + 4.0));
  CHECK(pair(0, 1).real() == doctest::Approx(4.0 * 0.7 * std::sqrt(2.0)));
  CHECK(pair(1, 0) == std::conj(pair(0, 1)));
}

TEST_CASE("scalar kernel is PSD and singular exactly at s = E0 / sigma^2") {
  const auto model = build_scalar_pair_model<double>(cdouble(1.0, 0.0), 25.0);
  for (double s : {0.0, 1.0, 10.0, 25.0, 40.0, 400.0}) CHECK(validate_psd(per_bin_covariance(model, s).matrix));
  const auto ev = hermitian_eigenvalues(per_bin_covariance(model, 25.0).matrix);
  CHECK(ev.minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("scalar-matched model with m > 1 exposes only pairwise kernels") {
  CMatrixXd s(2, 2);
  s << 1.0, 0.5, 0.0, 2.0;
  const auto model = build_scalar_matched_model<double>(s, 10.0);
  CHECK(model.pair_powers(1, 1).first == doctest::Approx(4.0));
  CHECK_THROWS_AS(per_bin_covariance(model, 1.0), Error);
  CHECK_NOTHROW(pair_covariance(model, 0, 1, 1.0));
}

TEST_CASE("per-bin covariances of random matrix-matched models are PSD") {
  for (std::uint64_t k = 0; k < 20; ++k) {
    RngStream rng(7, stream_key({99}), k);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(k % 4);
    const auto model = build_matrix_model<double>(random_matrix(rng, m), 0.5 + static_cast<double>(k));
    for (double s : {0.0, 0.005, 0.1, 1.0, 7.0, 100.0, 400.0})
      CHECK(validate_psd(per_bin_covariance(model, s).matrix));
  }
}
