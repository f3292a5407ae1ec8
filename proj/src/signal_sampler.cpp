#include "tsd/signal_sampler.hpp"

#include <cmath>

namespace tsd {

void DiscretizationParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::invalid_argument, "time step must be > 0");
  if (max_bins < 1) throw Error(Errc::invalid_argument, "max_bins must be >= 1");
}

FactorCache::FactorCache(KernelFn kernel, Eigen::Index dim, DiscretizationParams disc)
    : kernel_(std::move(kernel)), dim_(dim), disc_(disc) {
  disc_.validate();
  if (dim_ < 1) throw Error(Errc::dimension_mismatch, "signal dimension must be >= 1");
}

void FactorCache::extend_to(std::int64_t t) {
  const std::int64_t have = cached_bins();
  if (t < have) return;
  if (t >= disc_.max_bins) throw Error(Errc::invalid_argument, "bin index beyond the simulation horizon");
  // Grow geometrically so repeated first visits stay amortized O(1).
  const std::int64_t target = std::min<std::int64_t>(disc_.max_bins, std::max<std::int64_t>(t + 1, 2 * have));
  storage_.resize(static_cast<std::size_t>(target * dim_ * dim_));
  for (std::int64_t b = have; b < target; ++b) {
    const CMatrixXd c = kernel_(disc_.bin_time(b)) / disc_.dt;
    const CMatrixXd f = matrix_sqrt_psd(c);
    std::copy(f.data(), f.data() + dim_ * dim_, storage_.begin() + b * dim_ * dim_);
  }
}

Eigen::Map<const CMatrixXd> FactorCache::factor(std::int64_t t) {
  if (t < 0) throw Error(Errc::invalid_argument, "bin index must be >= 0");
  extend_to(t);
  return Eigen::Map<const CMatrixXd>(storage_.data() + t * dim_ * dim_, dim_, dim_);
}

void SignalSampler::sample_bin(std::int64_t t, RngStream& rng, Eigen::Ref<CVectorXd> out) {
  const auto f = cache_.factor(t);
  for (Eigen::Index k = 0; k < noise_.size(); ++k) noise_(k) = rng.complex_normal();
  // Factors are lower triangular on the Cholesky path; a dense product covers both paths.
  out.noalias() = f * noise_;
}

KernelFn model_kernel(const CorrelationModel& model) {
  return [model](double s) { return per_bin_covariance(model, s).matrix; };
}

KernelFn pair_kernel(const CorrelationModel& model, Eigen::Index i, Eigen::Index j) {
  return [model, i, j](double s) { return pair_covariance(model, i, j, s); };
}

KernelFn single_kernel(const SingleSignalSpec& spec, const CMatrixXd& basis) {
  const CMatrixXd power = spec.power_in_basis(basis);
  const double e0 = spec.background_energy();
  return [power, e0](double s) -> CMatrixXd {
    return power * s + CMatrixXd::Identity(power.rows(), power.cols()) * e0;
  };
}

KernelFn scalar_kernel(double power, double background) {
  return [power, background](double s) {
    CMatrixXd k(1, 1);
    k(0, 0) = power * s + background;
    return k;
  };
}

CVectorXd sample_bin(const CorrelationModel& model, std::int64_t t, const DiscretizationParams& disc,
                     RngStream& rng) {
  if (t < 0) throw Error(Errc::invalid_argument, "bin index must be >= 0");
  const CMatrixXd f = matrix_sqrt_psd((per_bin_covariance(model, disc.bin_time(t)).matrix / disc.dt).eval());
  CVectorXd w(f.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = rng.complex_normal();
  return f * w;
}

}  // namespace tsd
