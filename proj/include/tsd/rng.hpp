#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace tsd {

/// Independent random stream for one trial. The engine state is a pure function
/// of (master seed, stream key, trial index), so results do not depend on which
/// worker runs the trial or in what order.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_key, std::uint64_t trial_index);

  /// Circularly-symmetric complex normal: real and imaginary parts independent,
  /// each with variance 1/2, so E|z|^2 = 1.
  std::complex<double> complex_normal() {
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {re, im};
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Folds a list of small integers into a stream key (FNV-1a over 64-bit words).
std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts);

}  // namespace tsd
