#pragma once

#include "tsd/harness/config.hpp"
#include "tsd/harness/report.hpp"

namespace tsd::harness {

/// Randomized identity cases run by appendix-check, and the passes it requires.
inline constexpr int kAppendixCases = 100;
inline constexpr int kAppendixRequiredPasses = 99;

Report run_born_single(const ExperimentConfig& config);
Report run_born_joint(const ExperimentConfig& config);
Report run_marginals(const ExperimentConfig& config);
Report run_chsh(const ExperimentConfig& config);
Report run_mean_times(const ExperimentConfig& config);
Report run_appendix_check(const ExperimentConfig& config);
Report run_validate_model(const ExperimentConfig& config);

/// Dispatches on config.experiment.
Report run_experiment(const ExperimentConfig& config);

}  // namespace tsd::harness
