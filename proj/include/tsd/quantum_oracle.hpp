#pragma once

// Quantum reference values the simulations are compared against.
//
// Bipartite states are flattened with (i, j) -> i * m + j on every path in the
// library. Outcome "+" is channel 0 and carries value +1, "-" is channel 1 and
// carries -1; with the real rotation convention of `rotation()` the singlet
// correlation is E(t1, t2) = -cos 2(t1 - t2).

#include <array>
#include <cmath>
#include <numbers>

#include "tsd/linalg.hpp"

namespace tsd {

/// Hermitian, positive semidefinite, unit trace. Checked on construction.
template <typename Scalar>
class BasicDensityMatrix {
 public:
  explicit BasicDensityMatrix(CMatrix<Scalar> rho) : rho_(std::move(rho)) {
    if (rho_.rows() == 0 || rho_.rows() != rho_.cols())
      throw Error(Errc::dimension_mismatch, "density matrix must be square");
    if (!is_hermitian(rho_, Scalar(1e-10))) throw Error(Errc::not_hermitian, "density matrix");
    if (!validate_psd(rho_)) throw Error(Errc::not_psd, "density matrix");
    if (std::abs(rho_.trace() - Complex<Scalar>(1)) > Scalar(1e-12) * Scalar(rho_.rows()))
      throw Error(Errc::invalid_argument, "density matrix trace differs from 1");
  }

  const CMatrix<Scalar>& matrix() const { return rho_; }
  Eigen::Index dim() const { return rho_.rows(); }

 private:
  CMatrix<Scalar> rho_;
};

/// Unit vector of dimension m^2 on a bipartite space with sides of dimension m.
template <typename Scalar>
class BasicQuantumState {
 public:
  BasicQuantumState(CVector<Scalar> amplitudes, Eigen::Index side_dim)
      : psi_(std::move(amplitudes)), m_(side_dim) {
    if (m_ <= 0 || psi_.size() != m_ * m_) throw Error(Errc::dimension_mismatch, "state size must be m^2");
    if (std::abs(psi_.norm() - Scalar(1)) > Scalar(1e-12)) throw Error(Errc::invalid_argument, "state not normalized");
  }

  const CVector<Scalar>& amplitudes() const { return psi_; }
  Eigen::Index side_dim() const { return m_; }
  Complex<Scalar> operator()(Eigen::Index i, Eigen::Index j) const { return psi_(i * m_ + j); }

  /// Amplitudes as an m x m matrix Psi(i, j).
  CMatrix<Scalar> as_matrix() const {
    CMatrix<Scalar> out(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index j = 0; j < m_; ++j) out(i, j) = psi_(i * m_ + j);
    return out;
  }

 private:
  CVector<Scalar> psi_;
  Eigen::Index m_;
};

template <typename Scalar>
BasicDensityMatrix<Scalar> density_from_covariance(const CMatrix<Scalar>& b) {
  const Scalar tr = std::real(b.trace());
  if (!(tr > Scalar(0))) throw Error(Errc::zero_trace, "covariance has non-positive trace");
  return BasicDensityMatrix<Scalar>(b / tr);
}

/// <e| rho |e> for a unit vector e.
template <typename Scalar>
Scalar born_probability(const BasicDensityMatrix<Scalar>& rho, const CVector<Scalar>& e) {
  if (e.size() != rho.dim()) throw Error(Errc::dimension_mismatch, "basis vector size");
  if (std::abs(e.norm() - Scalar(1)) > Scalar(1e-10)) throw Error(Errc::invalid_argument, "basis vector not unit");
  return std::real(e.dot(rho.matrix() * e));
}

/// Probabilities of every channel of the orthonormal basis given by `basis` columns.
template <typename Scalar>
RVector<Scalar> born_probabilities(const BasicDensityMatrix<Scalar>& rho, const CMatrix<Scalar>& basis) {
  RVector<Scalar> p(basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) p(j) = born_probability<Scalar>(rho, basis.col(j));
  return p;
}

/// Psi(ij) = sigma12(ij) / ||sigma12||_F.
template <typename Scalar>
BasicQuantumState<Scalar> state_from_correlations(const CMatrix<Scalar>& cross) {
  if (cross.rows() == 0 || cross.rows() != cross.cols())
    throw Error(Errc::dimension_mismatch, "cross-correlation matrix must be square");
  const Scalar norm = cross.norm();
  if (norm == Scalar(0)) throw Error(Errc::all_zero, "cross-correlation matrix is zero");
  const Eigen::Index m = cross.rows();
  CVector<Scalar> psi(m * m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) psi(i * m + j) = cross(i, j) / norm;
  return BasicQuantumState<Scalar>(std::move(psi), m);
}

/// Reduced density matrix of side 1 or 2.
template <typename Scalar>
BasicDensityMatrix<Scalar> partial_trace(const BasicQuantumState<Scalar>& state, int side) {
  const CMatrix<Scalar> psi = state.as_matrix();
  CMatrix<Scalar> rho;
  if (side == 1)
    rho = psi * psi.adjoint();  // rho(i,i') = sum_j Psi(ij) conj(Psi(i'j))
  else if (side == 2)
    rho = psi.transpose() * psi.conjugate();  // rho(j,j') = sum_i Psi(ij) conj(Psi(ij'))
  else
    throw Error(Errc::invalid_argument, "side must be 1 or 2");
  rho = ((rho + rho.adjoint()) / Scalar(2)).eval();
  return BasicDensityMatrix<Scalar>(std::move(rho));
}

/// |<e_i^{t1} (x) e_j^{t2}, Psi>|^2 with i, j in {0 = "+", 1 = "-"}.
template <typename Scalar>
Scalar joint_born(const BasicQuantumState<Scalar>& state, Scalar theta1, Scalar theta2, int i, int j) {
  if (state.side_dim() != 2) throw Error(Errc::dimension_mismatch, "joint_born is defined for m = 2");
  const CVector<Scalar> e1 = rotation(theta1).col(i);
  const CVector<Scalar> e2 = rotation(theta2).col(j);
  Complex<Scalar> amp(0);
  for (Eigen::Index k = 0; k < 2; ++k)
    for (Eigen::Index l = 0; l < 2; ++l) amp += std::conj(e1(k)) * std::conj(e2(l)) * state(k, l);
  return std::norm(amp);
}

/// The four outcome probabilities in the order (++, +-, -+, --).
template <typename Scalar>
std::array<Scalar, 4> joint_table(const BasicQuantumState<Scalar>& state, Scalar theta1, Scalar theta2) {
  return {joint_born(state, theta1, theta2, 0, 0), joint_born(state, theta1, theta2, 0, 1),
          joint_born(state, theta1, theta2, 1, 0), joint_born(state, theta1, theta2, 1, 1)};
}

/// E = P(++) + P(--) - P(+-) - P(-+).
template <typename Scalar>
Scalar correlation(const BasicQuantumState<Scalar>& state, Scalar theta1, Scalar theta2) {
  const auto p = joint_table(state, theta1, theta2);
  return p[0] + p[3] - p[1] - p[2];
}

template <typename Scalar>
struct ChshAngles {
  Scalar a, a_prime, b, b_prime;
};

/// (0, pi/4, pi/8, 3pi/8): maximal violation for the polarization convention.
template <typename Scalar>
constexpr ChshAngles<Scalar> canonical_chsh_angles() {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  return {Scalar(0), pi / 4, pi / 8, 3 * pi / 8};
}

/// S = |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|.
inline double chsh_combination(double e_ab, double e_abp, double e_apb, double e_apbp) {
  return std::abs(e_ab - e_abp) + std::abs(e_apb + e_apbp);
}

template <typename Scalar>
Scalar chsh_value(const BasicQuantumState<Scalar>& state, const ChshAngles<Scalar>& angles) {
  return static_cast<Scalar>(chsh_combination(
      correlation(state, angles.a, angles.b), correlation(state, angles.a, angles.b_prime),
      correlation(state, angles.a_prime, angles.b), correlation(state, angles.a_prime, angles.b_prime)));
}

using DensityMatrix = BasicDensityMatrix<double>;
using QuantumState = BasicQuantumState<double>;

}  // namespace tsd
