#include "tsd/gaussian_quadratic.hpp"

#include <cmath>
#include <functional>

#include "tsd/parallel.hpp"
#include "tsd/rng.hpp"

namespace tsd {

namespace {

constexpr std::uint64_t kBlockSamples = 4096;

struct BlockMoments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations
};

using SampleFn = std::function<double(const CVectorXd&)>;

Estimate mc_mean(const GaussianLaw& law, const SampleFn& statistic, std::uint64_t samples, std::uint64_t seed,
                 unsigned workers, std::uint64_t key) {
  if (samples < kMinMcSamples) throw Error(Errc::invalid_argument, "Monte Carlo needs at least 1000 samples");
  const CMatrixXd factor = matrix_sqrt_psd(law.covariance());
  const Eigen::Index d = law.dim();
  const std::uint64_t blocks = (samples + kBlockSamples - 1) / kBlockSamples;

  auto moments = parallel_map<BlockMoments>(
      blocks, workers, [d] { return std::pair<CVectorXd, CVectorXd>(CVectorXd(d), CVectorXd(d)); },
      [&](std::pair<CVectorXd, CVectorXd>& scratch, std::uint64_t b) {
        auto& [w, phi] = scratch;
        RngStream rng(seed, key, b);
        const std::uint64_t begin = b * kBlockSamples;
        const std::uint64_t end = std::min(samples, begin + kBlockSamples);
        BlockMoments m;
        for (std::uint64_t s = begin; s < end; ++s) {
          for (Eigen::Index k = 0; k < d; ++k) w(k) = rng.complex_normal();
          phi.noalias() = factor * w;
          const double x = statistic(phi);
          m.count += 1.0;
          const double delta = x - m.mean;
          m.mean += delta / m.count;
          m.m2 += delta * (x - m.mean);
        }
        return m;
      });

  // Pairwise merge of block moments in block order.
  BlockMoments total;
  for (const auto& m : moments) {
    const double n = total.count + m.count;
    const double delta = m.mean - total.mean;
    total.mean += delta * m.count / n;
    total.m2 += m.m2 + delta * delta * total.count * m.count / n;
    total.count = n;
  }
  const double var = total.m2 / (total.count - 1.0);
  return {total.mean, std::sqrt(var / total.count)};
}

}  // namespace

Estimate mc_quadratic_mean(const GaussianLaw& law, const QuadraticForm& form, std::uint64_t samples,
                           std::uint64_t seed, unsigned workers) {
  detail::require_same_dim(law.dim(), form.dim());
  return mc_mean(
      law, [&form](const CVectorXd& phi) { return form(phi); }, samples, seed, workers, stream_key({8}));
}

Estimate mc_quadratic_correlation(const GaussianLaw& law, const QuadraticForm& a1, const QuadraticForm& a2,
                                  std::uint64_t samples, std::uint64_t seed, unsigned workers) {
  detail::require_same_dim(law.dim(), a1.dim());
  detail::require_same_dim(law.dim(), a2.dim());
  return mc_mean(
      law, [&a1, &a2](const CVectorXd& phi) { return a1(phi) * a2(phi); }, samples, seed, workers, stream_key({9}));
}

}  // namespace tsd
