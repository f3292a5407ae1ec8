#pragma once

// Single-signal threshold detection: kappa-window smoothing, background
// calibration, first-crossing click times and click-count probabilities.
//
// Each click attempt is a fresh trial: the detector reset re-zeroes the signal
// clock, so every trial starts at s = 0. No crossing is tested before the
// smoothing window has filled.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsd/estimate.hpp"
#include "tsd/prequantum_model.hpp"
#include "tsd/signal_sampler.hpp"

namespace tsd {

struct DetectorParams {
  double kappa = 0.04;       // integration window (time)
  double threshold = 50.0;   // E_d (energy)
  double background = 0.0;   // E0 used for calibration (energy)
  double max_time = 400.0;   // horizon of one trial (time)

  /// K = kappa / dt; throws unless it is a positive integer.
  std::int64_t window_bins(double dt) const;
  void validate(double dt) const;
};

/// Discretization covering one trial of `det.max_time`.
DiscretizationParams discretize(const DetectorParams& det, double dt);

/// Counting semantics. `independent`: every channel (or pair) runs its own
/// trials and probabilities are normalized click rates. `race`: all channels
/// share one signal and the first to click wins the trial.
enum class CountingMode { independent, race };

std::string to_string(CountingMode mode);

struct ClickRecord {
  int channel = 0;
  double tau = 0.0;
  std::uint64_t trial_index = 0;
};

/// |(dt / sqrt(kappa)) * sum(window)|^2.
double smoothed_energy(std::span<const cdouble> window, double dt, double kappa);

/// Running kappa-window sum for one channel: push the newest bin, the oldest drops out.
class SmoothedEnergy {
 public:
  SmoothedEnergy(std::int64_t window_bins, double dt);

  void push(cdouble sample);
  bool full() const { return filled_ >= static_cast<std::int64_t>(ring_.size()); }
  double energy() const { return std::norm(sum_) * scale_; }
  void reset();

 private:
  std::vector<cdouble> ring_;
  std::size_t head_ = 0;
  std::int64_t filled_ = 0;
  std::int64_t pushes_ = 0;
  cdouble sum_{0.0, 0.0};
  double scale_;  // dt^2 / kappa
};

/// m-channel race trial: returns the first (bin, channel) whose calibrated
/// energy reaches the threshold, ties broken uniformly from the trial stream.
std::optional<ClickRecord> run_single_trial(SignalSampler& sampler, const DetectorParams& det, RngStream& rng,
                                            std::uint64_t trial_index);
std::optional<ClickRecord> run_single_trial(const SingleSignalSpec& spec, const CMatrixXd& basis,
                                            const DetectorParams& det, double dt, RngStream& rng,
                                            std::uint64_t trial_index);

/// Trial on a single channel of power p: kernel p s + E0.
std::optional<double> run_channel_trial(SignalSampler& sampler, const DetectorParams& det, RngStream& rng);

struct RunParams {
  std::uint64_t trials = 1000;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
};

struct ProbabilityRow {
  std::string label;
  std::int64_t clicks = 0;
  double rate = 0.0;         // clicks per unit exposure time (independent mode)
  double rate_se = 0.0;
  double probability = 0.0;
  double standard_error = 0.0;
  double oracle = 0.0;
  double mean_time = 0.0;    // mean click time over clicking trials (NaN if none)
  double mean_time_se = 0.0;
};

struct RegimeDiagnostics {
  double kappa_over_tau = 0.0;           // largest over rows
  double signal_over_background = 0.0;   // sigma^2 tau / E0, largest over rows (NaN when not applicable)
  double no_click_rate = 0.0;
  bool violated = false;
};

struct ProbabilityReport {
  CountingMode mode = CountingMode::independent;
  std::int64_t trials = 0;
  std::int64_t clicks = 0;
  std::int64_t no_clicks = 0;
  std::vector<ProbabilityRow> rows;
  double max_discrepancy = 0.0;
  RegimeDiagnostics regime;
};

/// Minimum total clicks for a probability estimate.
inline constexpr std::int64_t kMinClicks = 100;
/// Regime bound on kappa / mean click time.
inline constexpr double kMaxKappaOverTau = 0.05;

/// Click probabilities of an m-channel signal measured in `basis`; oracle values
/// are the Born probabilities of rho = U^dagger B U / Tr B.
ProbabilityReport estimate_single_probabilities(const SingleSignalSpec& spec, const CMatrixXd& basis,
                                                const DetectorParams& det, double dt, const RunParams& run,
                                                CountingMode mode = CountingMode::independent);

struct MeanTimeResult {
  double mean_time = 0.0;
  double standard_error = 0.0;
  double scaled_constant = 0.0;  // tau * sigma^2 / E_d
  double kappa_over_tau = 0.0;
  std::int64_t clicks = 0;
  std::int64_t no_clicks = 0;
  bool regime_violation = false;
};

/// Mean first-click time of a scalar signal with power sigma^2 and no background.
MeanTimeResult mean_click_time(double power, const DetectorParams& det, double dt, const RunParams& run);

/// Mean smoothed energy of a background-only signal (kernel E0 delta(s1 - s2)).
Estimate calibrate_background(double background, const DetectorParams& det, double dt, const RunParams& run);

namespace detail {

/// Per-row click statistics accumulated over trials.
struct ClickTally {
  std::int64_t trials = 0;
  std::int64_t clicks = 0;
  double exposure = 0.0;  // sum of min(tau, max_time)
  double sum_tau = 0.0;
  double sum_tau2 = 0.0;
  double sum_exposure2 = 0.0;
  double sum_click_exposure = 0.0;

  void add_click(double tau);
  void add_no_click(double horizon);
  double rate() const { return exposure > 0.0 ? static_cast<double>(clicks) / exposure : 0.0; }
  double rate_variance() const;
  double mean_time() const;
  double mean_time_se() const;
};

/// Normalized rates with delta-method standard errors.
void fill_rate_probabilities(std::vector<ProbabilityRow>& rows, const std::vector<ClickTally>& tallies);
void fill_count_probabilities(std::vector<ProbabilityRow>& rows, std::int64_t total_clicks);
void finish_report(ProbabilityReport& report);

}  // namespace detail

}  // namespace tsd
