#pragma once

// Experiment configuration: a JSON document with the sections `model`,
// `detector`, `run`, `chsh` and `output`. Unknown keys are rejected.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tsd/coincidence_engine.hpp"
#include "tsd/linalg.hpp"
#include "tsd/prequantum_model.hpp"

namespace tsd::harness {

enum class Experiment { born_single, born_joint, marginals, chsh, mean_times, appendix_check, validate_model };

std::string to_string(Experiment experiment);
std::optional<Experiment> parse_experiment(std::string_view name);

enum class ReportFormat { report, table };

std::string to_string(ReportFormat format);

enum class ModelKind { scalar, matrix, singlet };

std::string to_string(ModelKind kind);

struct ModelConfig {
  std::optional<ModelKind> kind;      // defaults to scalar for mean-times, singlet otherwise
  std::optional<CMatrixXd> sigma12;   // scalar and matrix kinds
  std::optional<double> e0;           // defaults to 0 for born-single, 25 otherwise
  double scale = 1.0;                 // multiplies sigma12 (and the singlet amplitude)
  std::optional<CMatrixXd> power;     // B of the born-single signal, default diag(0.3, 0.7)
  double basis_angle = 0.0;           // born-single measurement basis rotation (m = 2)
  std::array<double, 2> angles{};     // born-joint and marginals basis rotations (m = 2)
};

struct DetectorConfig {
  double dt = 0.01;
  double kappa = 0.04;
  double threshold = 50.0;
  double coincidence_window = 0.0;
  double max_time = 400.0;
};

struct RunConfig {
  std::optional<std::uint64_t> trials;  // experiment-dependent default
  std::uint64_t seed = 1;
  unsigned workers = 1;
  CountingMode mode = CountingMode::independent;
};

struct ChshConfig {
  std::array<double, 4> angles{};  // a, a', b, b'
  ChshConfig();
};

struct OutputConfig {
  std::string dir;  // empty: write to stdout
  ReportFormat format = ReportFormat::report;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::born_single;
  ModelConfig model;
  DetectorConfig detector;
  RunConfig run;
  ChshConfig chsh;
  OutputConfig output;

  ModelKind model_kind() const;
  double background() const;
  std::uint64_t trials() const;
  DetectorParams detector_params() const;
  CoincidenceParams coincidence_params() const;
  RunParams run_params() const;
  SingleSignalSpec single_signal() const;
  CorrelationModel correlation_model() const;
};

/// Command-line overrides applied on top of the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<ReportFormat> format;
  std::optional<double> dt;
  std::optional<double> kappa;
  std::optional<double> threshold;
  std::optional<double> background;
  std::optional<double> window;
  std::optional<std::array<double, 4>> angles;
};

/// Parses JSON text; `source` names the origin in error messages.
/// Throws ParseError (with line:column) or ValidationError (with the key).
ExperimentConfig parse_config(std::string_view text, Experiment experiment, std::string_view source = "<config>");
ExperimentConfig load_config(const std::string& path, Experiment experiment);

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

/// Re-checks every numeric constraint of the downstream types.
void validate(const ExperimentConfig& config);

/// Parses "a,a2,b,b2".
std::array<double, 4> parse_angles(std::string_view text);

}  // namespace tsd::harness
