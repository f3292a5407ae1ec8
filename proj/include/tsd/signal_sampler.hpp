#pragma once

// Discretized delta-correlated Gaussian signals. The kernel delta(s1 - s2) becomes
// a Kronecker delta divided by the time step, so bin t carries an independent
// complex Gaussian vector with covariance C(s_t) / dt, s_t = (t + 1/2) dt.

#include <cstdint>
#include <functional>
#include <vector>

#include "tsd/linalg.hpp"
#include "tsd/prequantum_model.hpp"
#include "tsd/rng.hpp"

namespace tsd {

struct DiscretizationParams {
  double dt = 0.01;
  std::int64_t max_bins = 1;

  double bin_time(std::int64_t t) const { return (static_cast<double>(t) + 0.5) * dt; }
  void validate() const;
};

/// Returns the kernel C(s) (energy units, before division by dt).
using KernelFn = std::function<CMatrixXd(double)>;

/// Square-root factors of C(s_t)/dt, computed on first use and kept by bin index.
/// Not thread-safe; each worker owns its own cache.
class FactorCache {
 public:
  FactorCache(KernelFn kernel, Eigen::Index dim, DiscretizationParams disc);

  Eigen::Index dim() const { return dim_; }
  const DiscretizationParams& discretization() const { return disc_; }

  /// Factor F_t with F_t F_t^dagger = C(s_t)/dt.
  Eigen::Map<const CMatrixXd> factor(std::int64_t t);
  std::int64_t cached_bins() const { return static_cast<std::int64_t>(storage_.size() / (dim_ * dim_)); }

 private:
  void extend_to(std::int64_t t);

  KernelFn kernel_;
  Eigen::Index dim_;
  DiscretizationParams disc_;
  std::vector<cdouble> storage_;  // column-major factors, dim*dim per bin
};

/// Draws bin samples z_t = F_t w, w a standard circular complex normal vector.
class SignalSampler {
 public:
  SignalSampler(KernelFn kernel, Eigen::Index dim, DiscretizationParams disc)
      : cache_(std::move(kernel), dim, disc), noise_(dim) {}

  Eigen::Index dim() const { return cache_.dim(); }
  const DiscretizationParams& discretization() const { return cache_.discretization(); }

  void sample_bin(std::int64_t t, RngStream& rng, Eigen::Ref<CVectorXd> out);

  FactorCache& cache() { return cache_; }

 private:
  FactorCache cache_;
  CVectorXd noise_;
};

/// Full 2m-dimensional bi-signal (phi_1, phi_2).
KernelFn model_kernel(const CorrelationModel& model);
/// Two-dimensional sub-bi-signal (phi_1(i), phi_2(j)).
KernelFn pair_kernel(const CorrelationModel& model, Eigen::Index i, Eigen::Index j);
/// m-channel single signal in the measurement basis: (U^dagger B U) s + E0 I.
KernelFn single_kernel(const SingleSignalSpec& spec, const CMatrixXd& basis);
/// One channel with power p: p s + E0.
KernelFn scalar_kernel(double power, double background);

/// One-shot sample of the 2m-dimensional bi-signal at bin t (no caching).
CVectorXd sample_bin(const CorrelationModel& model, std::int64_t t, const DiscretizationParams& disc,
                     RngStream& rng);

}  // namespace tsd
