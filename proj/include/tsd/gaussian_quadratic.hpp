#pragma once

// Quadratic forms f_A(phi) = <A phi, phi> of zero-mean circularly-symmetric complex
// Gaussian vectors with covariance D:
//   E f_A          = Tr(D A)
//   E f_A1 f_A2    = Tr(D A1) Tr(D A2) + Tr(D A2 D A1)
// and the bipartite form with A1 on the first block and A2 on the second:
//   E f_A1 f_A2    = Tr(D11 A1) Tr(D22 A2) + Tr(D12 A2 D21 A1).

#include <cstdint>
#include <optional>

#include "tsd/estimate.hpp"
#include "tsd/linalg.hpp"

namespace tsd {

/// Largest supported dimension of a Gaussian law.
inline constexpr Eigen::Index kMaxGaussianDim = 64;

template <typename Scalar>
class BasicGaussianLaw {
 public:
  using Matrix = CMatrix<Scalar>;

  /// Validates Hermitian PSD covariance; `split` is the size d1 of the first block.
  explicit BasicGaussianLaw(Matrix covariance, std::optional<Eigen::Index> split = std::nullopt)
      : d_(std::move(covariance)), split_(split) {
    if (d_.rows() != d_.cols() || d_.rows() < 1)
      throw Error(Errc::dimension_mismatch, "covariance must be a non-empty square matrix");
    if (d_.rows() > kMaxGaussianDim) throw Error(Errc::dimension_mismatch, "covariance dimension exceeds the cap");
    if (!all_finite(d_)) throw Error(Errc::non_finite, "covariance has non-finite entries");
    if (!validate_psd(d_)) throw Error(Errc::not_psd, "covariance is not positive semidefinite");
    if (split_ && (*split_ < 1 || *split_ >= d_.rows()))
      throw Error(Errc::bad_partition, "block partition must split the space into two non-empty parts");
  }

  const Matrix& covariance() const { return d_; }
  Eigen::Index dim() const { return d_.rows(); }
  std::optional<Eigen::Index> split() const { return split_; }

  /// Blocks D11, D12, D21, D22; throws BadPartition without a split.
  auto block(int row, int col) const {
    if (!split_) throw Error(Errc::bad_partition, "law has no block partition");
    const Eigen::Index d1 = *split_, d2 = dim() - d1;
    return d_.block(row == 1 ? 0 : d1, col == 1 ? 0 : d1, row == 1 ? d1 : d2, col == 1 ? d1 : d2);
  }

 private:
  Matrix d_;
  std::optional<Eigen::Index> split_;
};

template <typename Scalar>
class BasicQuadraticForm {
 public:
  using Matrix = CMatrix<Scalar>;

  explicit BasicQuadraticForm(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw Error(Errc::dimension_mismatch, "quadratic form must be square");
    if (!all_finite(a_)) throw Error(Errc::non_finite, "quadratic form has non-finite entries");
    if (!is_hermitian(a_)) throw Error(Errc::not_hermitian, "quadratic form must be Hermitian");
  }

  const Matrix& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

  /// <A phi, phi>.
  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& phi) const {
    return std::real(phi.dot(a_ * phi));
  }

 private:
  Matrix a_;
};

namespace detail {

template <typename A, typename B>
auto trace_product(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  // Tr(a b) without forming the product.
  return (a.transpose().cwiseProduct(b)).sum();
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw Error(Errc::dimension_mismatch, "law and quadratic form dimensions differ");
}

}  // namespace detail

template <typename Scalar>
Scalar quadratic_mean(const BasicGaussianLaw<Scalar>& law, const BasicQuadraticForm<Scalar>& form) {
  detail::require_same_dim(law.dim(), form.dim());
  return std::real(detail::trace_product(law.covariance(), form.matrix()));
}

template <typename Scalar>
Scalar quadratic_correlation(const BasicGaussianLaw<Scalar>& law, const BasicQuadraticForm<Scalar>& a1,
                             const BasicQuadraticForm<Scalar>& a2) {
  detail::require_same_dim(law.dim(), a1.dim());
  detail::require_same_dim(law.dim(), a2.dim());
  const auto& d = law.covariance();
  const CMatrix<Scalar> da2 = d * a2.matrix();
  const CMatrix<Scalar> da1 = d * a1.matrix();
  return quadratic_mean(law, a1) * quadratic_mean(law, a2) + std::real(detail::trace_product(da2, da1));
}

template <typename Scalar>
Scalar quadratic_correlation_block(const BasicGaussianLaw<Scalar>& law, const BasicQuadraticForm<Scalar>& a1,
                                   const BasicQuadraticForm<Scalar>& a2) {
  if (!law.split()) throw Error(Errc::bad_partition, "law has no block partition");
  const Eigen::Index d1 = *law.split();
  if (a1.dim() != d1 || a2.dim() != law.dim() - d1)
    throw Error(Errc::bad_partition, "quadratic forms do not match the block partition");
  const CMatrix<Scalar> d11 = law.block(1, 1), d12 = law.block(1, 2), d21 = law.block(2, 1), d22 = law.block(2, 2);
  const Scalar mean1 = std::real(detail::trace_product(d11, a1.matrix()));
  const Scalar mean2 = std::real(detail::trace_product(d22, a2.matrix()));
  const CMatrix<Scalar> left = d12 * a2.matrix();
  const CMatrix<Scalar> right = d21 * a1.matrix();
  return mean1 * mean2 + std::real(detail::trace_product(left, right));
}

/// A1 (+) 0 and 0 (+) A2 on the full space of a bipartite law.
template <typename Scalar>
BasicQuadraticForm<Scalar> embed_block(const BasicQuadraticForm<Scalar>& a, Eigen::Index d1, Eigen::Index d2,
                                       int side) {
  CMatrix<Scalar> full = CMatrix<Scalar>::Zero(d1 + d2, d1 + d2);
  if (side == 1)
    full.topLeftCorner(d1, d1) = a.matrix();
  else
    full.bottomRightCorner(d2, d2) = a.matrix();
  return BasicQuadraticForm<Scalar>(std::move(full));
}

using GaussianLaw = BasicGaussianLaw<double>;
using QuadraticForm = BasicQuadraticForm<double>;

/// Minimum sample count of the Monte Carlo estimators.
inline constexpr std::uint64_t kMinMcSamples = 1000;

/// Monte Carlo mean of f_A over phi ~ CN(0, D). Samples are drawn in fixed
/// blocks, each from its own stream, so the result does not depend on `workers`.
Estimate mc_quadratic_mean(const GaussianLaw& law, const QuadraticForm& form, std::uint64_t samples,
                           std::uint64_t seed, unsigned workers = 1);

/// Monte Carlo mean of f_A1 f_A2 over phi ~ CN(0, D).
Estimate mc_quadratic_correlation(const GaussianLaw& law, const QuadraticForm& a1, const QuadraticForm& a2,
                                  std::uint64_t samples, std::uint64_t seed, unsigned workers = 1);

}  // namespace tsd
