#pragma once

// Statistical law of the classical signals: single-signal power matrices and
// bi-signal cross-correlation models with their per-bin covariance blocks.

#include <cmath>
#include <string>

#include "tsd/linalg.hpp"

namespace tsd {

/// Covariance of a single m-channel signal: B * s + E0 * I per unit time.
template <typename Scalar>
class BasicSingleSignalSpec {
 public:
  BasicSingleSignalSpec(CMatrix<Scalar> power, Scalar background_energy)
      : power_(std::move(power)), background_(background_energy) {
    if (power_.rows() == 0 || power_.rows() != power_.cols())
      throw Error(Errc::dimension_mismatch, "power matrix must be square and non-empty");
    if (!all_finite(power_) || !std::isfinite(background_))
      throw Error(Errc::non_finite, "power matrix or background is not finite");
    if (!is_hermitian(power_)) throw Error(Errc::not_hermitian, "power matrix B");
    if (!validate_psd(power_)) throw Error(Errc::not_psd, "power matrix B");
    if (!(std::real(power_.trace()) > Scalar(0)))
      throw Error(Errc::zero_trace, "power matrix must have positive trace");
    if (background_ < Scalar(0)) throw Error(Errc::invalid_argument, "background energy must be >= 0");
  }

  const CMatrix<Scalar>& power() const { return power_; }
  Scalar background_energy() const { return background_; }
  Eigen::Index channels() const { return power_.rows(); }

  /// Power matrix expressed in the measurement basis whose columns are `basis`.
  CMatrix<Scalar> power_in_basis(const CMatrix<Scalar>& basis) const {
    if (basis.rows() != channels() || basis.cols() != channels())
      throw Error(Errc::dimension_mismatch, "basis size does not match the signal");
    if (!is_unitary(basis)) throw Error(Errc::invalid_argument, "measurement basis is not unitary");
    return basis.adjoint() * power_ * basis;
  }

 private:
  CMatrix<Scalar> power_;
  Scalar background_;
};

enum class MatchingMode { scalar_matched, matrix_matched };

inline std::string to_string(MatchingMode mode) {
  return mode == MatchingMode::scalar_matched ? "scalar-matched" : "matrix-matched";
}

template <typename Scalar>
class BasicCorrelationModel;

template <typename Scalar>
BasicCorrelationModel<Scalar> build_matrix_model(const CMatrix<Scalar>& cross, Scalar background);
template <typename Scalar>
BasicCorrelationModel<Scalar> build_scalar_matched_model(const CMatrix<Scalar>& cross, Scalar background);

/// Statistical law of a bi-signal (phi_1, phi_2). Immutable; build it through
/// build_matrix_model, build_scalar_pair_model or build_scalar_matched_model.
template <typename Scalar>
class BasicCorrelationModel {
 public:
  const CMatrix<Scalar>& cross() const { return cross_; }
  /// sigma_hat_k^2 for side k in {1, 2}. In scalar-matched mode this is the
  /// entrywise |sigma12(ij)|^2 table, which is only a matrix for m = 1.
  const CMatrix<Scalar>& side_power(int side) const { return side == 1 ? side1_ : side2_; }
  Scalar background_energy() const { return background_; }
  MatchingMode mode() const { return mode_; }
  Eigen::Index dim() const { return cross_.rows(); }
  bool joint_detection_allowed() const { return background_ > Scalar(0); }

  /// Diagonal signal powers driving the channel pair (i, j):
  /// (sigma_1^2(ii), sigma_2^2(jj)) or (|sigma12(ij)|^2, |sigma12(ij)|^2).
  std::pair<Scalar, Scalar> pair_powers(Eigen::Index i, Eigen::Index j) const {
    if (mode_ == MatchingMode::scalar_matched) {
      const Scalar p = std::norm(cross_(i, j));
      return {p, p};
    }
    return {std::real(side1_(i, i)), std::real(side2_(j, j))};
  }

  /// Sum_ij |sigma12(ij)|^2.
  Scalar total_cross_power() const { return cross_.squaredNorm(); }

 private:
  BasicCorrelationModel(CMatrix<Scalar> cross, CMatrix<Scalar> side1, CMatrix<Scalar> side2, Scalar background,
                        MatchingMode mode)
      : cross_(std::move(cross)), side1_(std::move(side1)), side2_(std::move(side2)), background_(background),
        mode_(mode) {}

  friend BasicCorrelationModel build_matrix_model<Scalar>(const CMatrix<Scalar>&, Scalar);
  friend BasicCorrelationModel build_scalar_matched_model<Scalar>(const CMatrix<Scalar>&, Scalar);

  CMatrix<Scalar> cross_;
  CMatrix<Scalar> side1_;
  CMatrix<Scalar> side2_;
  Scalar background_;
  MatchingMode mode_;
};

namespace detail {

template <typename Scalar>
void check_cross_input(const CMatrix<Scalar>& cross, Scalar background) {
  if (cross.rows() == 0 || cross.rows() != cross.cols())
    throw Error(Errc::dimension_mismatch, "cross-correlation matrix must be square and non-empty");
  if (!all_finite(cross) || !std::isfinite(background)) throw Error(Errc::non_finite, "model input is not finite");
  if (background < Scalar(0)) throw Error(Errc::invalid_argument, "background energy must be >= 0");
}

}  // namespace detail

/// Matrix-matched model: sigma_1^2 = sigma12 sigma12^dagger, sigma_2^2 = sigma12^dagger sigma12.
template <typename Scalar>
BasicCorrelationModel<Scalar> build_matrix_model(const CMatrix<Scalar>& cross, Scalar background) {
  detail::check_cross_input(cross, background);
  if (cross.cwiseAbs().maxCoeff() == Scalar(0))
    throw Error(Errc::all_zero_cross_matrix, "sigma12 has no nonzero entry");
  CMatrix<Scalar> side1 = cross * cross.adjoint();
  CMatrix<Scalar> side2 = cross.adjoint() * cross;
  // Products of the form X X^dagger are Hermitian up to rounding; symmetrize exactly.
  side1 = ((side1 + side1.adjoint()) / Scalar(2)).eval();
  side2 = ((side2 + side2.adjoint()) / Scalar(2)).eval();
  if (!validate_psd(side1) || !validate_psd(side2))
    throw Error(Errc::not_psd, "side power matrices failed the PSD check");
  return BasicCorrelationModel<Scalar>(cross, std::move(side1), std::move(side2), background,
                                       MatchingMode::matrix_matched);
}

/// Scalar-matched model for an m x m table of per-pair correlations: each pair
/// (i, j) is an independent scalar bi-signal with sigma^2 = |sigma12(ij)|^2.
template <typename Scalar>
BasicCorrelationModel<Scalar> build_scalar_matched_model(const CMatrix<Scalar>& cross, Scalar background) {
  detail::check_cross_input(cross, background);
  if (cross.cwiseAbs().maxCoeff() == Scalar(0)) throw Error(Errc::zero_cross, "sigma12 is zero");
  if (!(background > Scalar(0)))
    throw Error(Errc::zero_background, "the scalar-matched joint model requires E0 > 0");
  CMatrix<Scalar> powers = cross.cwiseAbs2().template cast<Complex<Scalar>>();
  return BasicCorrelationModel<Scalar>(cross, powers, powers, background, MatchingMode::scalar_matched);
}

template <typename Scalar>
BasicCorrelationModel<Scalar> build_scalar_pair_model(Complex<Scalar> cross, Scalar background) {
  if (cross == Complex<Scalar>(0)) throw Error(Errc::zero_cross, "sigma12 is zero");
  CMatrix<Scalar> c(1, 1);
  c(0, 0) = cross;
  return build_scalar_matched_model<Scalar>(c, background);
}

/// sigma12 = scale * [[0, 1/sqrt2], [-1/sqrt2, 0]] in the (+, -) basis.
template <typename Scalar>
BasicCorrelationModel<Scalar> singlet_model(Scalar background, Scalar scale) {
  if (!(scale > Scalar(0))) throw Error(Errc::invalid_argument, "singlet scale must be > 0");
  CMatrix<Scalar> c = CMatrix<Scalar>::Zero(2, 2);
  const Scalar a = scale / std::sqrt(Scalar(2));
  c(0, 1) = a;
  c(1, 0) = -a;
  return build_matrix_model<Scalar>(c, background);
}

/// Re-expresses a matrix-matched model in the bases given by the columns of u1, u2:
/// sigma12' = u1^dagger sigma12 conj(u2).
template <typename Scalar>
BasicCorrelationModel<Scalar> rotate_bases(const BasicCorrelationModel<Scalar>& model, const CMatrix<Scalar>& u1,
                                           const CMatrix<Scalar>& u2) {
  const auto m = model.dim();
  if (u1.rows() != m || u1.cols() != m || u2.rows() != m || u2.cols() != m)
    throw Error(Errc::dimension_mismatch, "basis size does not match the model");
  if (model.mode() != MatchingMode::matrix_matched)
    throw Error(Errc::invalid_argument, "basis rotation needs a matrix-matched model");
  if (!is_unitary(u1) || !is_unitary(u2)) throw Error(Errc::invalid_argument, "bases must be unitary");
  return build_matrix_model<Scalar>(u1.adjoint() * model.cross() * u2.conjugate(), model.background_energy());
}

template <typename Scalar>
BasicCorrelationModel<Scalar> rotate_bases(const BasicCorrelationModel<Scalar>& model, Scalar theta1, Scalar theta2) {
  if (model.dim() != 2) throw Error(Errc::dimension_mismatch, "angle rotations are defined for m = 2");
  return rotate_bases(model, rotation(theta1), rotation(theta2));
}

template <typename Scalar>
struct BasicPerBinCovariance {
  Scalar time;
  CMatrix<Scalar> matrix;  // energy units, before division by the time step
};

/// 2m x 2m kernel block at time s:
///   [[sigma_1^2 s + E0 I,            2 sqrt(E0) sigma12 sqrt(s)],
///    [2 sqrt(E0) sigma12^dagger sqrt(s), sigma_2^2 s + E0 I   ]]
template <typename Scalar>
BasicPerBinCovariance<Scalar> per_bin_covariance(const BasicCorrelationModel<Scalar>& model, Scalar s) {
  if (s < Scalar(0)) throw Error(Errc::invalid_argument, "time must be >= 0");
  const auto m = model.dim();
  if (model.mode() == MatchingMode::scalar_matched && m != 1)
    throw Error(Errc::dimension_mismatch, "scalar-matched models only have pairwise kernels for m > 1");
  const Scalar e0 = model.background_energy();
  const Scalar coupling = Scalar(2) * std::sqrt(e0) * std::sqrt(s);
  CMatrix<Scalar> c(2 * m, 2 * m);
  const auto eye = CMatrix<Scalar>::Identity(m, m);
  c.topLeftCorner(m, m) = model.side_power(1) * s + eye * e0;
  c.bottomRightCorner(m, m) = model.side_power(2) * s + eye * e0;
  c.topRightCorner(m, m) = model.cross() * coupling;
  c.bottomLeftCorner(m, m) = model.cross().adjoint() * coupling;
  return {s, std::move(c)};
}

/// The 2 x 2 kernel of the sub-bi-signal (phi_1(i), phi_2(j)).
template <typename Scalar>
CMatrix<Scalar> pair_covariance(const BasicCorrelationModel<Scalar>& model, Eigen::Index i, Eigen::Index j,
                                Scalar s) {
  if (i < 0 || j < 0 || i >= model.dim() || j >= model.dim())
    throw Error(Errc::dimension_mismatch, "channel pair out of range");
  const Scalar e0 = model.background_energy();
  const auto [p1, p2] = model.pair_powers(i, j);
  const Complex<Scalar> c = model.cross()(i, j) * (Scalar(2) * std::sqrt(e0) * std::sqrt(s));
  CMatrix<Scalar> k(2, 2);
  k << Complex<Scalar>(p1 * s + e0), c, std::conj(c), Complex<Scalar>(p2 * s + e0);
  return k;
}

using SingleSignalSpec = BasicSingleSignalSpec<double>;
using CorrelationModel = BasicCorrelationModel<double>;
using PerBinCovariance = BasicPerBinCovariance<double>;

}  // namespace tsd
