#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace tsd {

/// Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Sample mean and standard error of the mean.
inline Estimate mean_estimate(std::span<const double> samples) {
  const double n = static_cast<double>(samples.size());
  if (samples.empty()) return {};
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double var = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(std::max(0.0, var) / n)};
}

}  // namespace tsd
