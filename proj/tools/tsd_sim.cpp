// tsd-sim: threshold signal detection experiments from the command line.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tsd/harness/config.hpp"
#include "tsd/harness/experiments.hpp"
#include "tsd/harness/report.hpp"

namespace {

using namespace tsd::harness;

struct Options {
  std::string config_path;
  Overrides overrides;
  std::string format;
  std::string angles;
};

void add_common_flags(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.overrides.seed, "master seed");
  sub->add_option("--trials", o.overrides.trials, "trials (per channel or pair in per-pair mode)");
  sub->add_option("--workers", o.overrides.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.overrides.out, "output directory (stdout when omitted)");
  sub->add_option("--format", o.format, "report or table")->check(CLI::IsMember({"report", "table"}));
  sub->add_option("--dt", o.overrides.dt, "time step");
  sub->add_option("--kappa", o.overrides.kappa, "integration window");
  sub->add_option("--threshold", o.overrides.threshold, "detection threshold E_d");
  sub->add_option("--background", o.overrides.background, "background energy E0");
  sub->add_option("--window", o.overrides.window, "coincidence window");
  sub->add_option("--angles", o.angles, "CHSH angles a,a2,b,b2 in radians");
}

std::optional<unsigned> env_workers() {
  const char* value = std::getenv("TSD_WORKERS");
  if (!value || !*value) return std::nullopt;
  char* end = nullptr;
  const unsigned long n = std::strtoul(value, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096)
    throw tsd::Error(tsd::Errc::validation_error, "TSD_WORKERS must be a positive integer");
  return static_cast<unsigned>(n);
}

int run(Experiment experiment, const Options& o) {
  ExperimentConfig config = o.config_path.empty() ? parse_config("{}", experiment, "<defaults>")
                                                  : load_config(o.config_path, experiment);
  if (const auto w = env_workers()) config.run.workers = *w;
  Overrides overrides = o.overrides;
  if (!o.format.empty()) overrides.format = o.format == "table" ? ReportFormat::table : ReportFormat::report;
  if (!o.angles.empty()) overrides.angles = parse_angles(o.angles);
  apply_overrides(config, overrides);
  validate(config);

  const auto start = std::chrono::steady_clock::now();
  const Report report = run_experiment(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_report(report, config.output.dir, config.output.format);

  std::cerr << to_string(experiment) << ": " << seconds << " s wall clock, " << config.trials() << " trials per unit, "
            << config.run.workers << " worker(s)";
  if (report.regime_violation) std::cerr << ", regime flag raised";
  if (report.check_failed) std::cerr << ", check failed";
  std::cerr << "\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold signal detection simulator"};
  app.require_subcommand(1);

  Options options;
  std::optional<Experiment> chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"born-single", "single-signal click probabilities against Born probabilities"},
      {"born-joint", "joint click probabilities of a bi-signal against |Psi(ij)|^2"},
      {"marginals", "single-side click probabilities against partial traces"},
      {"chsh", "four correlations and the CHSH value"},
      {"mean-times", "scaling of mean single and joint click times"},
      {"appendix-check", "Gaussian quadratic-form identities against Monte Carlo"},
      {"validate-model", "positivity of per-bin kernels and the state bridge"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common_flags(sub, options);
    sub->callback([&chosen, name = std::string(name)] { chosen = parse_experiment(name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(*chosen, options);
  } catch (const tsd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
