#include "tsd/threshold_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsd/parallel.hpp"
#include "tsd/quantum_oracle.hpp"

namespace tsd {

std::int64_t DetectorParams::window_bins(double dt) const {
  if (!(dt > 0.0)) throw Error(Errc::invalid_argument, "time step must be > 0");
  if (!(kappa > 0.0)) throw Error(Errc::invalid_argument, "kappa must be > 0");
  const double ratio = kappa / dt;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, k))
    throw Error(Errc::invalid_argument, "kappa must be a positive integer multiple of dt");
  return static_cast<std::int64_t>(k);
}

void DetectorParams::validate(double dt) const {
  window_bins(dt);
  if (!(threshold > 0.0)) throw Error(Errc::invalid_argument, "threshold must be > 0");
  if (!(background >= 0.0)) throw Error(Errc::invalid_argument, "background must be >= 0");
  if (!(max_time >= 10.0 * kappa)) throw Error(Errc::invalid_argument, "max_time must be >= 10 kappa");
}

DiscretizationParams discretize(const DetectorParams& det, double dt) {
  det.validate(dt);
  return {dt, static_cast<std::int64_t>(std::floor(det.max_time / dt + 1e-9))};
}

std::string to_string(CountingMode mode) { return mode == CountingMode::race ? "race" : "independent"; }

double smoothed_energy(std::span<const cdouble> window, double dt, double kappa) {
  cdouble sum(0.0, 0.0);
  for (const auto& z : window) sum += z;
  return std::norm(sum * (dt / std::sqrt(kappa)));
}

SmoothedEnergy::SmoothedEnergy(std::int64_t window_bins, double dt)
    : ring_(static_cast<std::size_t>(window_bins)), scale_(dt / static_cast<double>(window_bins)) {
  if (window_bins < 1) throw Error(Errc::invalid_argument, "window must hold at least one bin");
}

void SmoothedEnergy::push(cdouble sample) {
  sum_ += sample - ring_[head_];
  ring_[head_] = sample;
  head_ = (head_ + 1) % ring_.size();
  if (filled_ < static_cast<std::int64_t>(ring_.size())) ++filled_;
  // Resum now and then so rounding in the running sum cannot accumulate.
  if ((++pushes_ & 0xffff) == 0) {
    sum_ = cdouble(0.0, 0.0);
    for (const auto& z : ring_) sum_ += z;
  }
}

void SmoothedEnergy::reset() {
  std::fill(ring_.begin(), ring_.end(), cdouble(0.0, 0.0));
  head_ = 0;
  filled_ = 0;
  pushes_ = 0;
  sum_ = cdouble(0.0, 0.0);
}

std::optional<ClickRecord> run_single_trial(SignalSampler& sampler, const DetectorParams& det, RngStream& rng,
                                            std::uint64_t trial_index) {
  const auto& disc = sampler.discretization();
  const std::int64_t window = det.window_bins(disc.dt);
  const Eigen::Index m = sampler.dim();
  const double level = det.threshold + det.background;

  std::vector<SmoothedEnergy> energy(static_cast<std::size_t>(m), SmoothedEnergy(window, disc.dt));
  std::vector<int> crossing;
  CVectorXd z(m);
  for (std::int64_t t = 0; t < disc.max_bins; ++t) {
    sampler.sample_bin(t, rng, z);
    crossing.clear();
    for (Eigen::Index i = 0; i < m; ++i) {
      energy[i].push(z(i));
      if (t + 1 >= window && energy[i].energy() >= level) crossing.push_back(static_cast<int>(i));
    }
    if (!crossing.empty()) {
      const int pick = crossing.size() == 1 ? crossing.front() : crossing[rng.uniform_index(crossing.size())];
      return ClickRecord{pick, static_cast<double>(t + 1) * disc.dt, trial_index};
    }
  }
  return std::nullopt;
}

std::optional<ClickRecord> run_single_trial(const SingleSignalSpec& spec, const CMatrixXd& basis,
                                            const DetectorParams& det, double dt, RngStream& rng,
                                            std::uint64_t trial_index) {
  SignalSampler sampler(single_kernel(spec, basis), spec.channels(), discretize(det, dt));
  return run_single_trial(sampler, det, rng, trial_index);
}

std::optional<double> run_channel_trial(SignalSampler& sampler, const DetectorParams& det, RngStream& rng) {
  const auto& disc = sampler.discretization();
  if (sampler.dim() != 1) throw Error(Errc::dimension_mismatch, "channel trials take a one-dimensional signal");
  const std::int64_t window = det.window_bins(disc.dt);
  const double level = det.threshold + det.background;
  SmoothedEnergy energy(window, disc.dt);
  for (std::int64_t t = 0; t < disc.max_bins; ++t) {
    const cdouble f = sampler.cache().factor(t)(0, 0);
    energy.push(f * rng.complex_normal());
    if (t + 1 >= window && energy.energy() >= level) return static_cast<double>(t + 1) * disc.dt;
  }
  return std::nullopt;
}

namespace detail {

void ClickTally::add_click(double tau) {
  ++trials;
  ++clicks;
  exposure += tau;
  sum_tau += tau;
  sum_tau2 += tau * tau;
  sum_exposure2 += tau * tau;
  sum_click_exposure += tau;
}

void ClickTally::add_no_click(double horizon) {
  ++trials;
  exposure += horizon;
  sum_exposure2 += horizon * horizon;
}

double ClickTally::rate_variance() const {
  if (exposure <= 0.0) return 0.0;
  const double r = rate();
  const double ss = static_cast<double>(clicks) - 2.0 * r * sum_click_exposure + r * r * sum_exposure2;
  return std::max(0.0, ss) / (exposure * exposure);
}

double ClickTally::mean_time() const {
  return clicks > 0 ? sum_tau / static_cast<double>(clicks) : std::numeric_limits<double>::quiet_NaN();
}

double ClickTally::mean_time_se() const {
  if (clicks < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(clicks);
  const double mean = sum_tau / n;
  const double var = std::max(0.0, (sum_tau2 - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

void fill_rate_probabilities(std::vector<ProbabilityRow>& rows, const std::vector<ClickTally>& tallies) {
  double total = 0.0;
  for (const auto& t : tallies) total += t.rate();
  if (!(total > 0.0)) throw Error(Errc::insufficient_clicks, "no channel produced a click");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = tallies[i].rate();
    rows[i].rate = r;
    rows[i].rate_se = std::sqrt(tallies[i].rate_variance());
    rows[i].clicks = tallies[i].clicks;
    rows[i].probability = r / total;
    rows[i].mean_time = tallies[i].mean_time();
    rows[i].mean_time_se = tallies[i].mean_time_se();
    // dP_i/dr_k = (delta_ik * total - r_i) / total^2, rates of different rows independent.
    double var = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double d = ((i == k ? total : 0.0) - r) / (total * total);
      var += d * d * tallies[k].rate_variance();
    }
    rows[i].standard_error = std::sqrt(var);
  }
  // Exact normalization: put the rounding residue on the largest row.
  double sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sum += rows[i].probability;
    if (rows[i].probability > rows[largest].probability) largest = i;
  }
  rows[largest].probability += 1.0 - sum;
}

void fill_count_probabilities(std::vector<ProbabilityRow>& rows, std::int64_t total_clicks) {
  if (total_clicks <= 0) throw Error(Errc::insufficient_clicks, "no clicks recorded");
  const double n = static_cast<double>(total_clicks);
  for (auto& row : rows) {
    const double p = static_cast<double>(row.clicks) / n;
    row.probability = p;
    row.standard_error = std::sqrt(p * (1.0 - p) / n);
  }
}

void finish_report(ProbabilityReport& report) {
  report.max_discrepancy = 0.0;
  for (const auto& row : report.rows)
    report.max_discrepancy = std::max(report.max_discrepancy, std::abs(row.probability - row.oracle));
  report.regime.no_click_rate =
      report.trials > 0 ? static_cast<double>(report.no_clicks) / static_cast<double>(report.trials) : 0.0;
}

}  // namespace detail

namespace {

struct TrialOutcome {
  bool clicked = false;
  int channel = 0;
  double tau = 0.0;
};

}  // namespace

ProbabilityReport estimate_single_probabilities(const SingleSignalSpec& spec, const CMatrixXd& basis,
                                                const DetectorParams& det, double dt, const RunParams& run,
                                                CountingMode mode) {
  if (run.trials < 1) throw Error(Errc::insufficient_clicks, "at least one trial is required");
  const auto disc = discretize(det, dt);
  const CMatrixXd power = spec.power_in_basis(basis);
  const Eigen::Index m = spec.channels();
  const auto rho = density_from_covariance<double>(power);
  const double horizon = static_cast<double>(disc.max_bins) * dt;
  const double kappa = det.kappa;

  ProbabilityReport report;
  report.mode = mode;
  report.rows.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    report.rows[i].label = std::to_string(i);
    report.rows[i].oracle = std::real(rho.matrix()(i, i));
  }

  if (mode == CountingMode::independent) {
    std::vector<detail::ClickTally> tallies(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double p = std::max(0.0, std::real(power(i, i)));
      const std::uint64_t key = stream_key({1, static_cast<std::uint64_t>(i)});
      auto outcomes = parallel_map<TrialOutcome>(
          run.trials, run.workers,
          [&] { return SignalSampler(scalar_kernel(p, spec.background_energy()), 1, disc); },
          [&](SignalSampler& sampler, std::uint64_t trial) {
            RngStream rng(run.master_seed, key, trial);
            const auto tau = run_channel_trial(sampler, det, rng);
            return tau ? TrialOutcome{true, static_cast<int>(i), *tau} : TrialOutcome{};
          });
      for (const auto& o : outcomes) {
        if (o.clicked)
          tallies[i].add_click(o.tau);
        else
          tallies[i].add_no_click(horizon);
      }
      report.trials += tallies[i].trials;
      report.clicks += tallies[i].clicks;
    }
    report.no_clicks = report.trials - report.clicks;
    if (report.clicks < kMinClicks) throw Error(Errc::insufficient_clicks, "fewer than 100 clicks in total");
    detail::fill_rate_probabilities(report.rows, tallies);
  } else {
    const std::uint64_t key = stream_key({2});
    auto outcomes = parallel_map<TrialOutcome>(
        run.trials, run.workers, [&] { return SignalSampler(single_kernel(spec, basis), m, disc); },
        [&](SignalSampler& sampler, std::uint64_t trial) {
          RngStream rng(run.master_seed, key, trial);
          const auto click = run_single_trial(sampler, det, rng, trial);
          return click ? TrialOutcome{true, click->channel, click->tau} : TrialOutcome{};
        });
    std::vector<detail::ClickTally> tallies(static_cast<std::size_t>(m));
    for (const auto& o : outcomes) {
      ++report.trials;
      if (!o.clicked) continue;
      ++report.clicks;
      tallies[o.channel].add_click(o.tau);
    }
    report.no_clicks = report.trials - report.clicks;
    if (report.clicks < kMinClicks) throw Error(Errc::insufficient_clicks, "fewer than 100 clicks in total");
    for (Eigen::Index i = 0; i < m; ++i) {
      report.rows[i].clicks = tallies[i].clicks;
      report.rows[i].mean_time = tallies[i].mean_time();
      report.rows[i].mean_time_se = tallies[i].mean_time_se();
    }
    detail::fill_count_probabilities(report.rows, report.clicks);
  }

  report.regime.signal_over_background = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : report.rows)
    if (row.clicks > 0) report.regime.kappa_over_tau = std::max(report.regime.kappa_over_tau, kappa / row.mean_time);
  report.regime.violated = report.regime.kappa_over_tau > kMaxKappaOverTau;
  detail::finish_report(report);
  return report;
}

MeanTimeResult mean_click_time(double power, const DetectorParams& det, double dt, const RunParams& run) {
  if (det.background != 0.0)
    throw Error(Errc::invalid_argument, "mean click time scaling is defined without background");
  if (!(power > 0.0)) throw Error(Errc::invalid_argument, "signal power must be > 0");
  const auto disc = discretize(det, dt);
  const std::uint64_t key = stream_key({6});
  auto taus = parallel_map<double>(
      run.trials, run.workers, [&] { return SignalSampler(scalar_kernel(power, 0.0), 1, disc); },
      [&](SignalSampler& sampler, std::uint64_t trial) {
        RngStream rng(run.master_seed, key, trial);
        return run_channel_trial(sampler, det, rng).value_or(-1.0);
      });
  detail::ClickTally tally;
  for (double tau : taus)
    if (tau >= 0.0)
      tally.add_click(tau);
    else
      tally.add_no_click(static_cast<double>(disc.max_bins) * dt);
  if (tally.clicks < 2) throw Error(Errc::insufficient_clicks, "no clicks within the horizon");

  MeanTimeResult out;
  out.mean_time = tally.mean_time();
  out.standard_error = tally.mean_time_se();
  out.scaled_constant = out.mean_time * power / det.threshold;
  out.kappa_over_tau = det.kappa / out.mean_time;
  out.clicks = tally.clicks;
  out.no_clicks = tally.trials - tally.clicks;
  out.regime_violation = out.kappa_over_tau > kMaxKappaOverTau;
  return out;
}

Estimate calibrate_background(double background, const DetectorParams& det, double dt, const RunParams& run) {
  if (!(background >= 0.0)) throw Error(Errc::invalid_argument, "background must be >= 0");
  const std::int64_t window = det.window_bins(dt);
  const DiscretizationParams disc{dt, window};
  const std::uint64_t key = stream_key({5});
  auto energies = parallel_map<double>(
      run.trials, run.workers, [&] { return SignalSampler(scalar_kernel(0.0, background), 1, disc); },
      [&](SignalSampler& sampler, std::uint64_t trial) {
        RngStream rng(run.master_seed, key, trial);
        SmoothedEnergy energy(window, dt);
        for (std::int64_t t = 0; t < window; ++t) energy.push(sampler.cache().factor(t)(0, 0) * rng.complex_normal());
        return energy.energy();
      });
  return mean_estimate(energies);
}

}  // namespace tsd
