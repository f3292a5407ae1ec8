#include "tsd/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsd/coincidence_engine.hpp"
#include "tsd/gaussian_quadratic.hpp"
#include "tsd/quantum_oracle.hpp"
#include "tsd/rng.hpp"
#include "tsd/threshold_detector.hpp"

namespace tsd::harness {

namespace {

Report new_report(const ExperimentConfig& config) {
  Report report;
  report.experiment = to_string(config.experiment);
  report.config = config_document(config);
  return report;
}

Table probability_table(const std::string& name, const ProbabilityReport& p) {
  Table table{name, {}};
  for (const auto& row : p.rows)
    table.rows.push_back({row.label, row.clicks, row.probability, row.standard_error, row.oracle});
  return table;
}

Document probability_diagnostics(const ProbabilityReport& p) {
  Document d;
  d["mode"] = p.mode == CountingMode::race ? "race" : "per-pair";
  d["trials"] = p.trials;
  d["clicks"] = p.clicks;
  d["no_clicks"] = p.no_clicks;
  d["no_click_rate"] = number(p.regime.no_click_rate);
  d["kappa_over_tau"] = number(p.regime.kappa_over_tau);
  if (std::isfinite(p.regime.signal_over_background))
    d["signal_over_background"] = number(p.regime.signal_over_background);
  d["max_discrepancy"] = number(p.max_discrepancy);
  Document rows = Document::array();
  for (const auto& row : p.rows) {
    Document r;
    r["label"] = row.label;
    if (p.mode == CountingMode::independent) {
      r["rate"] = number(row.rate);
      r["rate_se"] = number(row.rate_se);
    }
    r["mean_time"] = number(row.mean_time);
    r["mean_time_se"] = number(row.mean_time_se);
    rows.push_back(std::move(r));
  }
  d["rows"] = std::move(rows);
  d["regime_violation"] = p.regime.violated;
  return d;
}

CorrelationModel measured_model(const ExperimentConfig& config) {
  auto model = config.correlation_model();
  const auto& a = config.model.angles;
  if (a[0] != 0.0 || a[1] != 0.0) model = rotate_bases(model, a[0], a[1]);
  return model;
}

RunParams derived_run(const ExperimentConfig& config, std::uint64_t tag) {
  RunParams run = config.run_params();
  run.master_seed = stream_key({config.run.seed, tag});
  return run;
}

CMatrixXd random_complex(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
  return m;
}

CMatrixXd random_hermitian(RngStream& rng, Eigen::Index d) {
  const CMatrixXd x = random_complex(rng, d, d);
  return (x + x.adjoint()) / 2.0;
}

CMatrixXd random_covariance(RngStream& rng, Eigen::Index d) {
  const CMatrixXd g = random_complex(rng, d, d);
  CMatrixXd c = g * g.adjoint() / static_cast<double>(d);
  return (c + c.adjoint()) / 2.0;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

Report run_born_single(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto spec = config.single_signal();
  CMatrixXd basis = CMatrixXd::Identity(spec.channels(), spec.channels());
  if (spec.channels() == 2) basis = rotation(config.model.basis_angle);
  const auto p = estimate_single_probabilities(spec, basis, config.detector_params(), config.detector.dt,
                                               config.run_params(), config.run.mode);
  report.tables.push_back(probability_table("probabilities", p));
  report.diagnostics = probability_diagnostics(p);
  report.regime_violation = p.regime.violated;
  return report;
}

Report run_born_joint(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto model = measured_model(config);
  const auto p = estimate_joint_probabilities(model, config.coincidence_params(), config.detector.dt,
                                              config.run_params());
  report.tables.push_back(probability_table("joint", p));
  report.diagnostics = probability_diagnostics(p);
  report.regime_violation = p.regime.violated;
  return report;
}

Report run_marginals(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto model = measured_model(config);
  const auto [side1, side2] = estimate_marginal_probabilities(model, config.coincidence_params(),
                                                              config.detector.dt, config.run_params());
  report.tables.push_back(probability_table("side1", side1));
  report.tables.push_back(probability_table("side2", side2));
  report.diagnostics["side1"] = probability_diagnostics(side1);
  report.diagnostics["side2"] = probability_diagnostics(side2);
  report.regime_violation = side1.regime.violated || side2.regime.violated;
  return report;
}

Report run_chsh(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto model = config.correlation_model();
  const auto state = state_from_correlations<double>(model.cross());
  const auto& ang = config.chsh.angles;
  const ChshAngles<double> angles{ang[0], ang[1], ang[2], ang[3]};
  struct Setting {
    const char* label;
    double theta1, theta2;
  };
  const Setting settings[4] = {{"E(a,b)", angles.a, angles.b},
                               {"E(a,b')", angles.a, angles.b_prime},
                               {"E(a',b)", angles.a_prime, angles.b},
                               {"E(a',b')", angles.a_prime, angles.b_prime}};

  Table correlations{"correlations", {}};
  Document per_setting = Document::array();
  double e[4];
  double var_s = 0.0;
  for (int k = 0; k < 4; ++k) {
    const auto rotated = rotate_bases(model, settings[k].theta1, settings[k].theta2);
    const auto p = estimate_joint_probabilities(rotated, config.coincidence_params(), config.detector.dt,
                                                derived_run(config, 20 + static_cast<std::uint64_t>(k)));
    const auto est = correlation_estimate(p);
    e[k] = est.value;
    var_s += est.standard_error * est.standard_error;
    correlations.rows.push_back({settings[k].label, p.clicks, est.value, est.standard_error,
                                 correlation(state, settings[k].theta1, settings[k].theta2)});
    Document d = probability_diagnostics(p);
    d["setting"] = settings[k].label;
    d["theta1"] = number(settings[k].theta1);
    d["theta2"] = number(settings[k].theta2);
    Document probs = Document::array();
    for (const auto& row : p.rows)
      probs.push_back({{"label", row.label}, {"probability", number(row.probability)}, {"oracle", number(row.oracle)}});
    d["probabilities"] = std::move(probs);
    per_setting.push_back(std::move(d));
    report.regime_violation = report.regime_violation || p.regime.violated;
  }
  const double s = chsh_combination(e[0], e[1], e[2], e[3]);
  const double s_se = std::sqrt(var_s);
  report.tables.push_back(std::move(correlations));
  report.tables.push_back({"chsh", {{"S", std::nullopt, s, s_se, chsh_value(state, angles)}}});
  report.diagnostics["classical_bound"] = 2;
  report.diagnostics["violates_classical_bound"] = s > 2.0;
  report.diagnostics["sigmas_above_classical_bound"] = number(s_se > 0.0 ? (s - 2.0) / s_se : 0.0);
  report.diagnostics["settings"] = std::move(per_setting);
  return report;
}

Report run_mean_times(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto& det = config.detector;
  const std::int64_t k_bins = config.detector_params().window_bins(det.dt);
  // E_d / (sigma^2 kappa) of the configured detector at sigma^2 = 1.
  const double lambda = det.threshold / det.kappa;

  const double powers[3] = {0.5, 1.0, 2.0};
  const double thresholds[2] = {20.0, 40.0};
  Table matched{"single_scaling", {}}, fixed{"single_scaling_fixed_kappa", {}};
  Document single = Document::array();
  double c_min[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double c_max[2] = {0.0, 0.0};
  std::uint64_t point = 0;
  for (double ed : thresholds)
    for (double s2 : powers) {
      const std::string label = "s2=" + std::to_string(s2).substr(0, 3) + ",Ed=" + std::to_string(int(ed));
      for (int variant = 0; variant < 2; ++variant) {
        DetectorParams d;
        double dt = det.dt;
        d.threshold = ed;
        d.background = 0.0;
        if (variant == 0) {
          // Self-similar resolution: kappa, dt and the horizon scale with E_d / sigma^2.
          d.kappa = ed / (s2 * lambda);
          dt = d.kappa / static_cast<double>(k_bins);
          d.max_time = det.max_time * d.kappa / det.kappa;
        } else {
          d.kappa = det.kappa;
          d.max_time = det.max_time;
        }
        const auto r = mean_click_time(s2, d, dt, derived_run(config, 30 + point++));
        (variant == 0 ? matched : fixed).rows.push_back({label, r.clicks, r.mean_time, r.standard_error, ed / s2});
        c_min[variant] = std::min(c_min[variant], r.scaled_constant);
        c_max[variant] = std::max(c_max[variant], r.scaled_constant);
        Document entry;
        entry["label"] = label;
        entry["resolution"] = variant == 0 ? "matched" : "fixed";
        entry["kappa"] = number(d.kappa);
        entry["dt"] = number(dt);
        entry["scaled_constant"] = number(r.scaled_constant);
        entry["kappa_over_tau"] = number(r.kappa_over_tau);
        entry["no_clicks"] = r.no_clicks;
        entry["regime_violation"] = r.regime_violation;
        single.push_back(std::move(entry));
        report.regime_violation = report.regime_violation || r.regime_violation;
      }
    }
  report.tables.push_back(std::move(matched));
  report.tables.push_back(std::move(fixed));
  report.diagnostics["single"] = std::move(single);
  report.diagnostics["single_spread_matched"] = number(c_max[0] / c_min[0] - 1.0);
  report.diagnostics["single_spread_fixed"] = number(c_max[1] / c_min[1] - 1.0);

  // Joint scaling around the configured scalar model.
  const auto base_model = config.correlation_model();
  const double s2 = base_model.pair_powers(0, 0).first;
  const double e0 = config.background();
  const double ed = det.threshold;
  struct Point {
    const char* label;
    double s2, e0, ed, expected_ratio;
  };
  const Point points[4] = {{"base", s2, e0, ed, 1.0},
                           {"2Ed", s2, e0, 2.0 * ed, 4.0},
                           {"2E0", s2, 2.0 * e0, ed, 0.5},
                           {"2s2", 2.0 * s2, e0, ed, 0.5}};
  Table joint{"joint_scaling", {}};
  Table ratios{"joint_scaling_ratios", {}};
  Document joint_diag = Document::array();
  double base_tau = 0.0, base_se = 0.0;
  for (int k = 0; k < 4; ++k) {
    const auto& pt = points[k];
    const auto model = build_scalar_pair_model<double>(cdouble(std::sqrt(pt.s2), 0.0), pt.e0);
    auto params = config.coincidence_params();
    params.detector.threshold = pt.ed;
    params.detector.background = pt.e0;
    const auto r = mean_joint_time(model, params, det.dt, derived_run(config, 40 + static_cast<std::uint64_t>(k)));
    joint.rows.push_back({pt.label, r.clicks, r.mean_time, r.standard_error, pt.ed * pt.ed / (4.0 * pt.e0 * pt.s2)});
    if (k == 0) {
      base_tau = r.mean_time;
      base_se = r.standard_error;
    } else {
      const double ratio = r.mean_time / base_tau;
      const double se = ratio * std::hypot(r.standard_error / r.mean_time, base_se / base_tau);
      ratios.rows.push_back({std::string(pt.label) + "/base", std::nullopt, ratio, se, pt.expected_ratio});
    }
    Document entry;
    entry["label"] = pt.label;
    entry["threshold_product"] = number(r.threshold_product);
    entry["signal_over_background"] = number(r.signal_over_background);
    entry["kappa_over_tau"] = number(r.kappa_over_tau);
    entry["no_clicks"] = r.no_clicks;
    entry["regime_violation"] = r.regime_violation;
    joint_diag.push_back(std::move(entry));
    report.regime_violation = report.regime_violation || r.regime_violation;
  }
  report.tables.push_back(std::move(joint));
  report.tables.push_back(std::move(ratios));
  report.diagnostics["joint"] = std::move(joint_diag);
  return report;
}

Report run_appendix_check(const ExperimentConfig& config) {
  Report report = new_report(config);
  const std::uint64_t samples = config.trials();
  const char* kinds[3] = {"mean", "correlation", "block"};
  Table cases{"identities", {}};
  int passes = 0;
  double linearity = 0.0, symmetry = 0.0, block_consistency = 0.0;
  for (int k = 0; k < kAppendixCases; ++k) {
    RngStream gen(config.run.seed, stream_key({10}), static_cast<std::uint64_t>(k));
    const int kind = k % 3;
    const Eigen::Index d = kind == 2 ? 2 + (k / 3) % 7 : 1 + (k / 3) % 8;
    const GaussianLaw law(random_covariance(gen, d), kind == 2 ? std::optional<Eigen::Index>(d / 2) : std::nullopt);
    const std::uint64_t mc_seed = stream_key({config.run.seed, 11, static_cast<std::uint64_t>(k)});

    double analytic = 0.0;
    Estimate mc;
    if (kind == 0) {
      const QuadraticForm a(random_hermitian(gen, d));
      analytic = quadratic_mean(law, a);
      mc = mc_quadratic_mean(law, a, samples, mc_seed, config.run.workers);
      // Linearity in A and in D.
      const QuadraticForm b(random_hermitian(gen, d));
      const QuadraticForm sum(a.matrix() * 2.0 + b.matrix() * 3.0);
      linearity = std::max(linearity, relative_gap(quadratic_mean(law, sum),
                                                   2.0 * quadratic_mean(law, a) + 3.0 * quadratic_mean(law, b)));
      const GaussianLaw other(random_covariance(gen, d));
      const GaussianLaw mixed(law.covariance() + other.covariance() * 0.5);
      linearity = std::max(linearity, relative_gap(quadratic_mean(mixed, a),
                                                   quadratic_mean(law, a) + 0.5 * quadratic_mean(other, a)));
    } else if (kind == 1) {
      const QuadraticForm a1(random_hermitian(gen, d)), a2(random_hermitian(gen, d));
      analytic = quadratic_correlation(law, a1, a2);
      mc = mc_quadratic_correlation(law, a1, a2, samples, mc_seed, config.run.workers);
      symmetry = std::max(symmetry, relative_gap(analytic, quadratic_correlation(law, a2, a1)));
    } else {
      const Eigen::Index d1 = d / 2, d2 = d - d1;
      const QuadraticForm a1(random_hermitian(gen, d1)), a2(random_hermitian(gen, d2));
      analytic = quadratic_correlation_block(law, a1, a2);
      const auto full1 = embed_block(a1, d1, d2, 1), full2 = embed_block(a2, d1, d2, 2);
      mc = mc_quadratic_correlation(law, full1, full2, samples, mc_seed, config.run.workers);
      block_consistency =
          std::max(block_consistency, relative_gap(analytic, quadratic_correlation(law, full1, full2)));
    }
    if (std::abs(mc.value - analytic) <= 3.0 * mc.standard_error) ++passes;
    cases.rows.push_back({"case " + std::to_string(k) + " " + kinds[kind] + " d=" + std::to_string(d),
                          static_cast<std::int64_t>(samples), mc.value, mc.standard_error, analytic});
  }
  report.tables.push_back(std::move(cases));
  constexpr double kAlgebraTol = 1e-10;
  report.diagnostics["cases"] = kAppendixCases;
  report.diagnostics["passes_within_3se"] = passes;
  report.diagnostics["required_passes"] = kAppendixRequiredPasses;
  report.diagnostics["linearity_max_relative_gap"] = number(linearity);
  report.diagnostics["symmetry_max_relative_gap"] = number(symmetry);
  report.diagnostics["block_consistency_max_relative_gap"] = number(block_consistency);
  report.check_failed = passes < kAppendixRequiredPasses || linearity > kAlgebraTol || symmetry > kAlgebraTol ||
                        block_consistency > kAlgebraTol;
  return report;
}

Report run_validate_model(const ExperimentConfig& config) {
  Report report = new_report(config);
  const auto model = measured_model(config);
  const auto disc = discretize(config.detector_params(), config.detector.dt);
  const Eigen::Index m = model.dim();

  // Positivity of every per-bin kernel over the trial horizon.
  std::int64_t failures = 0;
  double min_relative = std::numeric_limits<double>::infinity();
  auto check = [&](const CMatrixXd& c) {
    if (!validate_psd(c)) ++failures;
    const auto ev = hermitian_eigenvalues(c);
    const double scale = std::max(1e-300, ev.cwiseAbs().maxCoeff());
    min_relative = std::min(min_relative, ev.minCoeff() / scale);
  };
  for (std::int64_t t = 0; t < disc.max_bins; ++t) {
    const double s = disc.bin_time(t);
    if (model.mode() == MatchingMode::matrix_matched)
      check(per_bin_covariance(model, s).matrix);
    else
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) check(pair_covariance(model, i, j, s));
  }

  const auto state = state_from_correlations<double>(model.cross());
  Table joint{"joint_oracle", {}};
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      joint.rows.push_back(
          {pair_label(i, j, m), std::nullopt, std::norm(model.cross()(i, j)) / model.total_cross_power(),
           0.0, std::norm(state(i, j))});
    }
  report.tables.push_back(std::move(joint));

  double bridge = 0.0;
  if (model.mode() == MatchingMode::matrix_matched) {
    for (int side = 1; side <= 2; ++side) {
      const CMatrixXd& power = model.side_power(side);
      const CMatrixXd normalized = power / power.trace().real();
      const auto rho = partial_trace(state, side);
      // Side 2 agrees up to complex conjugation (identical diagonals).
      const CMatrixXd target = side == 1 ? normalized : normalized.conjugate().eval();
      bridge = std::max(bridge, (rho.matrix() - target).cwiseAbs().maxCoeff());
      Table t{"side" + std::to_string(side), {}};
      for (Eigen::Index i = 0; i < m; ++i)
        t.rows.push_back({std::to_string(i), std::nullopt, normalized(i, i).real(), 0.0, rho.matrix()(i, i).real()});
      report.tables.push_back(std::move(t));
    }
  }
  constexpr double kBridgeTol = 1e-10;
  report.diagnostics["dim"] = m;
  report.diagnostics["matching"] = to_string(model.mode());
  report.diagnostics["joint_detection_allowed"] = model.joint_detection_allowed();
  report.diagnostics["bins_checked"] = disc.max_bins;
  report.diagnostics["psd_failures"] = failures;
  report.diagnostics["min_relative_eigenvalue"] = number(min_relative);
  if (model.mode() == MatchingMode::matrix_matched)
    report.diagnostics["partial_trace_bridge_max_gap"] = number(bridge);
  report.check_failed = failures > 0 || bridge > kBridgeTol;
  return report;
}

Report run_experiment(const ExperimentConfig& config) {
  validate(config);
  switch (config.experiment) {
    case Experiment::born_single: return run_born_single(config);
    case Experiment::born_joint: return run_born_joint(config);
    case Experiment::marginals: return run_marginals(config);
    case Experiment::chsh: return run_chsh(config);
    case Experiment::mean_times: return run_mean_times(config);
    case Experiment::appendix_check: return run_appendix_check(config);
    case Experiment::validate_model: return run_validate_model(config);
  }
  throw Error(Errc::invalid_argument, "unknown experiment");
}

}  // namespace tsd::harness
