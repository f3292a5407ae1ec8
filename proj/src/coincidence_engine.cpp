#include "tsd/coincidence_engine.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "tsd/parallel.hpp"
#include "tsd/quantum_oracle.hpp"

namespace tsd {

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min() / 2;

void require_background(const CorrelationModel& model, const CoincidenceParams& params) {
  if (!model.joint_detection_allowed() || !(params.detector.background > 0.0))
    throw Error(Errc::zero_background, "joint detection requires a background field E0 > 0");
}

struct JointOutcome {
  bool clicked = false;
  JointClickRecord record;
};

}  // namespace

std::int64_t CoincidenceParams::window_bins(double dt) const {
  if (!(window >= 0.0)) throw Error(Errc::invalid_argument, "coincidence window must be >= 0");
  const double ratio = window / dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-9 * std::max(1.0, k))
    throw Error(Errc::invalid_argument, "coincidence window must be an integer multiple of dt");
  return static_cast<std::int64_t>(k);
}

void CoincidenceParams::validate(double dt) const {
  detector.validate(dt);
  window_bins(dt);
}

std::string pair_label(Eigen::Index i, Eigen::Index j, Eigen::Index m) {
  if (m == 2) return std::string(i == 0 ? "+" : "-") + (j == 0 ? "+" : "-");
  return std::to_string(i) + "," + std::to_string(j);
}

Estimate correlation_estimate(const ProbabilityReport& report) {
  if (report.rows.size() != 4) throw Error(Errc::dimension_mismatch, "correlations need a 2 x 2 joint report");
  const auto& r = report.rows;
  // E = 1 - 2 Q with Q = P(+-) + P(-+).
  const double q = r[1].probability + r[2].probability;
  double var_q = 0.0;
  if (report.mode == CountingMode::independent) {
    double total = 0.0;
    for (const auto& row : r) total += row.rate;
    const double anti = r[1].rate + r[2].rate;
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = ((k == 1 || k == 2 ? total : 0.0) - anti) / (total * total);
      var_q += d * d * r[k].rate_se * r[k].rate_se;
    }
  } else {
    var_q = q * (1.0 - q) / static_cast<double>(report.clicks);
  }
  const double e = r[0].probability + r[3].probability - r[1].probability - r[2].probability;
  return {e, 2.0 * std::sqrt(var_q)};
}

std::optional<JointClickRecord> run_pair_trial(SignalSampler& sampler, int i, int j, const CoincidenceParams& params,
                                               RngStream& rng, std::uint64_t trial_index) {
  const auto& disc = sampler.discretization();
  if (sampler.dim() != 2) throw Error(Errc::dimension_mismatch, "pair trials take a two-dimensional signal");
  const auto& det = params.detector;
  const std::int64_t window = det.window_bins(disc.dt);
  const std::int64_t v = params.window_bins(disc.dt);
  const double level = det.threshold + det.background;

  SmoothedEnergy e1(window, disc.dt), e2(window, disc.dt);
  std::int64_t last1 = kNever, last2 = kNever;
  CVectorXd z(2);
  for (std::int64_t t = 0; t < disc.max_bins; ++t) {
    sampler.sample_bin(t, rng, z);
    e1.push(z(0));
    e2.push(z(1));
    if (t + 1 < window) continue;
    const bool c1 = e1.energy() >= level;
    const bool c2 = e2.energy() >= level;
    if (c1) last1 = t;
    if (c2) last2 = t;
    if ((c1 || c2) && std::llabs(last1 - last2) <= v) {
      return JointClickRecord{i, j, static_cast<double>(last1 + 1) * disc.dt, static_cast<double>(last2 + 1) * disc.dt,
                              trial_index};
    }
  }
  return std::nullopt;
}

std::optional<JointClickRecord> run_pair_trial(const CorrelationModel& model, int i, int j,
                                               const CoincidenceParams& params, double dt, RngStream& rng,
                                               std::uint64_t trial_index) {
  require_background(model, params);
  SignalSampler sampler(pair_kernel(model, i, j), 2, discretize(params.detector, dt));
  return run_pair_trial(sampler, i, j, params, rng, trial_index);
}

std::optional<JointClickRecord> run_race_trial(SignalSampler& sampler, const CoincidenceParams& params,
                                               RngStream& rng, std::uint64_t trial_index) {
  const auto& disc = sampler.discretization();
  const Eigen::Index m = sampler.dim() / 2;
  if (m < 1 || sampler.dim() != 2 * m) throw Error(Errc::dimension_mismatch, "race trials take a 2m-dimensional signal");
  const auto& det = params.detector;
  const std::int64_t window = det.window_bins(disc.dt);
  const std::int64_t v = params.window_bins(disc.dt);
  const double level = det.threshold + det.background;

  std::vector<SmoothedEnergy> energy(static_cast<std::size_t>(2 * m), SmoothedEnergy(window, disc.dt));
  std::vector<std::int64_t> last(static_cast<std::size_t>(2 * m), kNever);
  std::vector<std::pair<int, int>> candidates;
  CVectorXd z(2 * m);
  for (std::int64_t t = 0; t < disc.max_bins; ++t) {
    sampler.sample_bin(t, rng, z);
    bool any = false;
    for (Eigen::Index k = 0; k < 2 * m; ++k) {
      energy[k].push(z(k));
      if (t + 1 >= window && energy[k].energy() >= level) {
        last[k] = t;
        any = true;
      }
    }
    if (!any) continue;
    candidates.clear();
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) {
        const std::int64_t u1 = last[a], u2 = last[m + b];
        if ((u1 == t || u2 == t) && u1 != kNever && u2 != kNever && std::llabs(u1 - u2) <= v)
          candidates.emplace_back(static_cast<int>(a), static_cast<int>(b));
      }
    if (candidates.empty()) continue;
    const auto [a, b] = candidates.size() == 1 ? candidates.front() : candidates[rng.uniform_index(candidates.size())];
    return JointClickRecord{a, b, static_cast<double>(last[a] + 1) * disc.dt,
                            static_cast<double>(last[m + b] + 1) * disc.dt, trial_index};
  }
  return std::nullopt;
}

ProbabilityReport estimate_joint_probabilities(const CorrelationModel& model, const CoincidenceParams& params,
                                               double dt, const RunParams& run) {
  require_background(model, params);
  if (run.trials < 1) throw Error(Errc::insufficient_clicks, "at least one trial is required");
  const auto disc = discretize(params.detector, dt);
  params.validate(dt);
  const Eigen::Index m = model.dim();
  const auto state = state_from_correlations<double>(model.cross());
  const double horizon = static_cast<double>(disc.max_bins) * dt;
  const double e0 = params.detector.background;

  ProbabilityReport report;
  report.mode = params.mode;
  report.rows.resize(static_cast<std::size_t>(m * m));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      auto& row = report.rows[i * m + j];
      row.label = pair_label(i, j, m);
      row.oracle = std::norm(state(i, j));
    }

  std::vector<detail::ClickTally> tallies(static_cast<std::size_t>(m * m));
  if (params.mode == CountingMode::independent) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const std::uint64_t key = stream_key({3, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
        auto outcomes = parallel_map<JointOutcome>(
            run.trials, run.workers, [&] { return SignalSampler(pair_kernel(model, i, j), 2, disc); },
            [&](SignalSampler& sampler, std::uint64_t trial) {
              RngStream rng(run.master_seed, key, trial);
              const auto rec = run_pair_trial(sampler, static_cast<int>(i), static_cast<int>(j), params, rng, trial);
              return rec ? JointOutcome{true, *rec} : JointOutcome{};
            });
        auto& tally = tallies[i * m + j];
        for (const auto& o : outcomes) {
          if (o.clicked)
            tally.add_click(o.record.tau());
          else
            tally.add_no_click(horizon);
        }
        report.trials += tally.trials;
        report.clicks += tally.clicks;
      }
    report.no_clicks = report.trials - report.clicks;
    if (report.clicks < kMinClicks) throw Error(Errc::insufficient_clicks, "fewer than 100 joint clicks");
    detail::fill_rate_probabilities(report.rows, tallies);
  } else {
    if (model.mode() != MatchingMode::matrix_matched && m != 1)
      throw Error(Errc::invalid_argument, "race mode needs the full bi-signal of a matrix-matched model");
    const std::uint64_t key = stream_key({4});
    auto outcomes = parallel_map<JointOutcome>(
        run.trials, run.workers, [&] { return SignalSampler(model_kernel(model), 2 * m, disc); },
        [&](SignalSampler& sampler, std::uint64_t trial) {
          RngStream rng(run.master_seed, key, trial);
          const auto rec = run_race_trial(sampler, params, rng, trial);
          return rec ? JointOutcome{true, *rec} : JointOutcome{};
        });
    for (const auto& o : outcomes) {
      ++report.trials;
      if (!o.clicked) continue;
      ++report.clicks;
      tallies[o.record.channel1 * m + o.record.channel2].add_click(o.record.tau());
    }
    report.no_clicks = report.trials - report.clicks;
    if (report.clicks < kMinClicks) throw Error(Errc::insufficient_clicks, "fewer than 100 joint clicks");
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      report.rows[r].clicks = tallies[r].clicks;
      report.rows[r].mean_time = tallies[r].mean_time();
      report.rows[r].mean_time_se = tallies[r].mean_time_se();
    }
    detail::fill_count_probabilities(report.rows, report.clicks);
  }

  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& row = report.rows[i * m + j];
      if (row.clicks == 0) continue;
      const auto [p1, p2] = model.pair_powers(i, j);
      report.regime.kappa_over_tau = std::max(report.regime.kappa_over_tau, params.detector.kappa / row.mean_time);
      report.regime.signal_over_background =
          std::max(report.regime.signal_over_background, std::max(p1, p2) * row.mean_time / e0);
    }
  report.regime.violated = report.regime.kappa_over_tau > kMaxKappaOverTau ||
                           report.regime.signal_over_background > kMaxSignalOverBackground;
  detail::finish_report(report);
  return report;
}

JointTimeResult mean_joint_time(const CorrelationModel& model, const CoincidenceParams& params, double dt,
                                const RunParams& run) {
  require_background(model, params);
  if (model.dim() != 1) throw Error(Errc::dimension_mismatch, "mean joint time takes a scalar (m = 1) model");
  const auto disc = discretize(params.detector, dt);
  params.validate(dt);
  const std::uint64_t key = stream_key({7});
  auto taus = parallel_map<double>(
      run.trials, run.workers, [&] { return SignalSampler(pair_kernel(model, 0, 0), 2, disc); },
      [&](SignalSampler& sampler, std::uint64_t trial) {
        RngStream rng(run.master_seed, key, trial);
        const auto rec = run_pair_trial(sampler, 0, 0, params, rng, trial);
        return rec ? rec->tau() : -1.0;
      });
  detail::ClickTally tally;
  for (double tau : taus)
    if (tau >= 0.0)
      tally.add_click(tau);
    else
      tally.add_no_click(static_cast<double>(disc.max_bins) * dt);
  if (tally.clicks < 2) throw Error(Errc::insufficient_clicks, "no joint clicks within the horizon");

  const double sigma2 = model.pair_powers(0, 0).first;
  const double e0 = params.detector.background;
  const double ed = params.detector.threshold;
  JointTimeResult out;
  out.mean_time = tally.mean_time();
  out.standard_error = tally.mean_time_se();
  out.threshold_product = 4.0 * e0 * sigma2 * out.mean_time / (ed * ed);
  out.signal_over_background = sigma2 * out.mean_time / e0;
  out.kappa_over_tau = params.detector.kappa / out.mean_time;
  out.clicks = tally.clicks;
  out.no_clicks = tally.trials - tally.clicks;
  out.regime_violation = out.kappa_over_tau > kMaxKappaOverTau || out.signal_over_background > kMaxSignalOverBackground;
  return out;
}

std::pair<ProbabilityReport, ProbabilityReport> estimate_marginal_probabilities(const CorrelationModel& model,
                                                                                const CoincidenceParams& params,
                                                                                double dt, const RunParams& run) {
  if (model.mode() != MatchingMode::matrix_matched)
    throw Error(Errc::invalid_argument, "marginal probabilities need a matrix-matched model");
  const auto state = state_from_correlations<double>(model.cross());
  const Eigen::Index m = model.dim();
  const CMatrixXd identity = CMatrixXd::Identity(m, m);

  auto side_report = [&](int side) {
    const SingleSignalSpec spec(model.side_power(side), model.background_energy());
    RunParams side_run = run;
    side_run.master_seed = stream_key({run.master_seed, 100 + static_cast<std::uint64_t>(side)});
    auto report = estimate_single_probabilities(spec, identity, params.detector, dt, side_run, params.mode);
    const auto rho = partial_trace(state, side);
    for (Eigen::Index i = 0; i < m; ++i) report.rows[i].oracle = std::real(rho.matrix()(i, i));
    detail::finish_report(report);
    return report;
  };
  return {side_report(1), side_report(2)};
}

}  // namespace tsd
