#pragma once

// Joint threshold detection of bi-signal components with background calibration.
//
// A channel "crosses" at every bin where its calibrated energy E - E0 reaches E_d;
// the most recent crossing bin is latched per channel. A joint click on the pair
// (i, j) happens at the first bin where a new crossing leaves both latched bins
// within the coincidence window, and its time is the later of the two. A trial in
// which no pair matches before max_time is a NoClick.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "tsd/prequantum_model.hpp"
#include "tsd/threshold_detector.hpp"

namespace tsd {

struct CoincidenceParams {
  DetectorParams detector;   // shared threshold for every channel; detector.background is E0
  double window = 0.0;       // coincidence window v (time), integer multiple of dt
  CountingMode mode = CountingMode::independent;

  std::int64_t window_bins(double dt) const;
  void validate(double dt) const;
};

struct JointClickRecord {
  int channel1 = 0;
  int channel2 = 0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::uint64_t trial_index = 0;

  double tau() const { return std::max(tau1, tau2); }
};

/// Weak-signal bound sigma^2 tau / E0 <= 0.2 used for the regime flag.
inline constexpr double kMaxSignalOverBackground = 0.2;

/// Trial on the two-dimensional sub-bi-signal of the pair (i, j); `sampler` must
/// carry pair_kernel(model, i, j).
std::optional<JointClickRecord> run_pair_trial(SignalSampler& sampler, int i, int j, const CoincidenceParams& params,
                                               RngStream& rng, std::uint64_t trial_index);
std::optional<JointClickRecord> run_pair_trial(const CorrelationModel& model, int i, int j,
                                               const CoincidenceParams& params, double dt, RngStream& rng,
                                               std::uint64_t trial_index);

/// Race trial on the full 2m-dimensional bi-signal: the first pair to satisfy the
/// joint-click condition wins; simultaneous candidates are broken uniformly.
std::optional<JointClickRecord> run_race_trial(SignalSampler& sampler, const CoincidenceParams& params,
                                               RngStream& rng, std::uint64_t trial_index);

/// m x m joint probabilities, rows flattened as (i, j) -> i * m + j, oracle |Psi(ij)|^2.
/// Independent mode runs `run.trials` trials per pair.
ProbabilityReport estimate_joint_probabilities(const CorrelationModel& model, const CoincidenceParams& params,
                                               double dt, const RunParams& run);

struct JointTimeResult {
  double mean_time = 0.0;
  double standard_error = 0.0;
  double threshold_product = 0.0;       // 4 E0 sigma^2 tau / E_d^2
  double signal_over_background = 0.0;  // sigma^2 tau / E0
  double kappa_over_tau = 0.0;
  std::int64_t clicks = 0;
  std::int64_t no_clicks = 0;
  bool regime_violation = false;
};

/// Mean joint click time of a scalar (m = 1) model.
JointTimeResult mean_joint_time(const CorrelationModel& model, const CoincidenceParams& params, double dt,
                                const RunParams& run);

/// Single-side detection on phi_1 and phi_2 separately; oracle values come from
/// the partial traces of Psi built from sigma12.
std::pair<ProbabilityReport, ProbabilityReport> estimate_marginal_probabilities(const CorrelationModel& model,
                                                                                const CoincidenceParams& params,
                                                                                double dt, const RunParams& run);

/// E = P(++) + P(--) - P(+-) - P(-+) of a 2 x 2 joint report with its standard
/// error: delta method on the four rates (independent mode) or multinomial
/// counts (race mode).
Estimate correlation_estimate(const ProbabilityReport& report);

/// "++", "+-", ... for m = 2, otherwise "i,j".
std::string pair_label(Eigen::Index i, Eigen::Index j, Eigen::Index m);

}  // namespace tsd
