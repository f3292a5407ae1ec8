#include "tsd/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "tsd/quantum_oracle.hpp"

namespace tsd::harness {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& constraint) {
  throw Error(Errc::validation_error, "invalid value for '" + key + "': " + constraint);
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  // nlohmann reports the byte just past the offending token.
  if (column > 1) --column;
  return std::to_string(line) + ":" + std::to_string(column);
}

void check_keys(const json& section, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!section.is_object()) invalid(path, "expected an object");
  for (const auto& [key, value] : section.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(Errc::validation_error, "unknown key '" + (path.empty() ? key : path + "." + key) + "'");
  }
}

double get_real(const json& v, const std::string& key) {
  if (!v.is_number()) invalid(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(key, "must be finite");
  return x;
}

std::uint64_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    invalid(key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) invalid(key, "expected a string");
  return v.get<std::string>();
}

cdouble get_complex(const json& v, const std::string& key) {
  if (v.is_number()) return {get_real(v, key), 0.0};
  if (v.is_array() && v.size() == 2) return {get_real(v[0], key), get_real(v[1], key)};
  invalid(key, "expected a real number or a [re, im] pair");
}

/// Row-major list of m^2 complex entries.
CMatrixXd get_square_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) invalid(key, "expected a non-empty row-major list of entries");
  const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (static_cast<std::size_t>(m * m) != v.size()) invalid(key, "entry count must be a perfect square");
  CMatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = get_complex(v[static_cast<std::size_t>(i * m + j)], key);
  return out;
}

template <std::size_t N>
std::array<double, N> get_reals(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != N) invalid(key, "expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = get_real(v[k], key);
  return out;
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, "model", {"kind", "sigma12", "e0", "scale", "power", "basis_angle", "angles"});
  if (j.contains("kind")) {
    const auto kind = get_string(j["kind"], "model.kind");
    if (kind == "scalar")
      m.kind = ModelKind::scalar;
    else if (kind == "matrix")
      m.kind = ModelKind::matrix;
    else if (kind == "singlet")
      m.kind = ModelKind::singlet;
    else
      invalid("model.kind", "expected scalar, matrix or singlet");
  }
  if (j.contains("sigma12")) m.sigma12 = get_square_matrix(j["sigma12"], "model.sigma12");
  if (j.contains("e0")) m.e0 = get_real(j["e0"], "model.e0");
  if (j.contains("scale")) m.scale = get_real(j["scale"], "model.scale");
  if (j.contains("power")) m.power = get_square_matrix(j["power"], "model.power");
  if (j.contains("basis_angle")) m.basis_angle = get_real(j["basis_angle"], "model.basis_angle");
  if (j.contains("angles")) m.angles = get_reals<2>(j["angles"], "model.angles");
}

void parse_detector(const json& j, DetectorConfig& d) {
  check_keys(j, "detector", {"dt", "kappa", "threshold", "coincidence_window", "max_time"});
  if (j.contains("dt")) d.dt = get_real(j["dt"], "detector.dt");
  if (j.contains("kappa")) d.kappa = get_real(j["kappa"], "detector.kappa");
  if (j.contains("threshold")) d.threshold = get_real(j["threshold"], "detector.threshold");
  if (j.contains("coincidence_window"))
    d.coincidence_window = get_real(j["coincidence_window"], "detector.coincidence_window");
  if (j.contains("max_time")) d.max_time = get_real(j["max_time"], "detector.max_time");
}

void parse_run(const json& j, RunConfig& r) {
  check_keys(j, "run", {"trials", "seed", "workers", "mode"});
  if (j.contains("trials")) r.trials = get_count(j["trials"], "run.trials");
  if (j.contains("seed")) r.seed = get_count(j["seed"], "run.seed");
  if (j.contains("workers")) r.workers = static_cast<unsigned>(get_count(j["workers"], "run.workers"));
  if (j.contains("mode")) {
    const auto mode = get_string(j["mode"], "run.mode");
    if (mode == "per-pair")
      r.mode = CountingMode::independent;
    else if (mode == "race")
      r.mode = CountingMode::race;
    else
      invalid("run.mode", "expected per-pair or race");
  }
}

ReportFormat parse_format(std::string_view text, const std::string& key) {
  if (text == "report") return ReportFormat::report;
  if (text == "table") return ReportFormat::table;
  invalid(key, "expected report or table");
}

void parse_output(const json& j, OutputConfig& o) {
  check_keys(j, "output", {"dir", "format"});
  if (j.contains("dir")) o.dir = get_string(j["dir"], "output.dir");
  if (j.contains("format")) o.format = parse_format(get_string(j["format"], "output.format"), "output.format");
}

void require_grid(double value, double dt, const std::string& key, bool allow_zero) {
  const double ratio = value / dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-9 * std::max(1.0, k) || k < (allow_zero ? 0.0 : 1.0))
    invalid(key, "must be " + std::string(allow_zero ? "a nonnegative" : "a positive") +
                     " integer multiple of detector.dt");
}

}  // namespace

std::string to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::born_single: return "born-single";
    case Experiment::born_joint: return "born-joint";
    case Experiment::marginals: return "marginals";
    case Experiment::chsh: return "chsh";
    case Experiment::mean_times: return "mean-times";
    case Experiment::appendix_check: return "appendix-check";
    case Experiment::validate_model: return "validate-model";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (auto e : {Experiment::born_single, Experiment::born_joint, Experiment::marginals, Experiment::chsh,
                 Experiment::mean_times, Experiment::appendix_check, Experiment::validate_model})
    if (to_string(e) == name) return e;
  return std::nullopt;
}

std::string to_string(ReportFormat format) { return format == ReportFormat::table ? "table" : "report"; }

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::scalar: return "scalar";
    case ModelKind::matrix: return "matrix";
    case ModelKind::singlet: return "singlet";
  }
  return "unknown";
}

ChshConfig::ChshConfig() {
  const auto c = canonical_chsh_angles<double>();
  angles = {c.a, c.a_prime, c.b, c.b_prime};
}

ModelKind ExperimentConfig::model_kind() const {
  if (model.kind) return *model.kind;
  return experiment == Experiment::mean_times ? ModelKind::scalar : ModelKind::singlet;
}

double ExperimentConfig::background() const {
  if (model.e0) return *model.e0;
  return experiment == Experiment::born_single ? 0.0 : 25.0;
}

std::uint64_t ExperimentConfig::trials() const {
  if (run.trials) return *run.trials;
  switch (experiment) {
    case Experiment::born_single: return 15000;
    case Experiment::born_joint: return 5000;
    case Experiment::marginals: return 15000;
    case Experiment::chsh: return 5000;
    case Experiment::mean_times: return 4000;
    case Experiment::appendix_check: return 100000;
    case Experiment::validate_model: return 1;
  }
  return 1;
}

DetectorParams ExperimentConfig::detector_params() const {
  DetectorParams det;
  det.kappa = detector.kappa;
  det.threshold = detector.threshold;
  det.background = background();
  det.max_time = detector.max_time;
  return det;
}

CoincidenceParams ExperimentConfig::coincidence_params() const {
  CoincidenceParams params;
  params.detector = detector_params();
  params.window = detector.coincidence_window;
  params.mode = run.mode;
  return params;
}

RunParams ExperimentConfig::run_params() const { return {trials(), run.seed, run.workers}; }

SingleSignalSpec ExperimentConfig::single_signal() const {
  CMatrixXd b(2, 2);
  b << 0.3, 0.0, 0.0, 0.7;
  if (model.power) b = *model.power;
  return SingleSignalSpec(b * model.scale, background());
}

CorrelationModel ExperimentConfig::correlation_model() const {
  const double e0 = background();
  switch (model_kind()) {
    case ModelKind::singlet:
      if (model.sigma12) throw Error(Errc::validation_error, "model.sigma12 is not used by the singlet kind");
      return singlet_model(e0, model.scale);
    case ModelKind::matrix:
      if (!model.sigma12) throw Error(Errc::validation_error, "model.sigma12 is required for the matrix kind");
      return build_matrix_model<double>(*model.sigma12 * model.scale, e0);
    case ModelKind::scalar: {
      CMatrixXd c = CMatrixXd::Ones(1, 1);
      if (model.sigma12) c = *model.sigma12;
      return build_scalar_matched_model<double>(c * model.scale, e0);
    }
  }
  throw Error(Errc::validation_error, "unknown model kind");
}

ExperimentConfig parse_config(std::string_view text, Experiment experiment, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw Error(Errc::parse_error, std::string(source) + ":" + line_column(text, e.byte) + ": " + what);
  }

  ExperimentConfig config;
  config.experiment = experiment;
  check_keys(doc, "", {"experiment", "model", "detector", "run", "chsh", "output"});
  if (doc.contains("experiment")) {
    const auto name = get_string(doc["experiment"], "experiment");
    const auto e = parse_experiment(name);
    if (!e) invalid("experiment", "unknown experiment '" + name + "'");
    if (*e != experiment)
      invalid("experiment", "config is for '" + name + "' but '" + to_string(experiment) + "' was requested");
  }
  if (doc.contains("model")) parse_model(doc["model"], config.model);
  if (doc.contains("detector")) parse_detector(doc["detector"], config.detector);
  if (doc.contains("run")) parse_run(doc["run"], config.run);
  if (doc.contains("chsh")) {
    check_keys(doc["chsh"], "chsh", {"angles"});
    if (doc["chsh"].contains("angles")) config.chsh.angles = get_reals<4>(doc["chsh"]["angles"], "chsh.angles");
  }
  if (doc.contains("output")) parse_output(doc["output"], config.output);
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path, Experiment experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), experiment, path);
}

void apply_overrides(ExperimentConfig& config, const Overrides& o) {
  if (o.seed) config.run.seed = *o.seed;
  if (o.trials) config.run.trials = *o.trials;
  if (o.workers) config.run.workers = *o.workers;
  if (o.out) config.output.dir = *o.out;
  if (o.format) config.output.format = *o.format;
  if (o.dt) config.detector.dt = *o.dt;
  if (o.kappa) config.detector.kappa = *o.kappa;
  if (o.threshold) config.detector.threshold = *o.threshold;
  if (o.background) config.model.e0 = *o.background;
  if (o.window) config.detector.coincidence_window = *o.window;
  if (o.angles) config.chsh.angles = *o.angles;
}

void validate(const ExperimentConfig& c) {
  const auto& d = c.detector;
  if (!(d.dt > 0.0)) invalid("detector.dt", "must be > 0");
  if (!(d.kappa > 0.0)) invalid("detector.kappa", "must be > 0");
  require_grid(d.kappa, d.dt, "detector.kappa", false);
  if (!(d.threshold > 0.0)) invalid("detector.threshold", "must be > 0");
  if (!(d.coincidence_window >= 0.0)) invalid("detector.coincidence_window", "must be >= 0");
  require_grid(d.coincidence_window, d.dt, "detector.coincidence_window", true);
  if (!(d.max_time >= 10.0 * d.kappa)) invalid("detector.max_time", "must be >= 10 * detector.kappa");
  if (c.model.e0 && !(*c.model.e0 >= 0.0)) invalid("model.e0", "must be >= 0");
  if (!(c.model.scale > 0.0)) invalid("model.scale", "must be > 0");
  if (c.run.trials && *c.run.trials < 1) invalid("run.trials", "must be >= 1");
  if (c.run.workers < 1) invalid("run.workers", "must be >= 1");
  for (double a : c.chsh.angles)
    if (!std::isfinite(a)) invalid("chsh.angles", "must be finite");

  // Build the model the experiment will use so its constraints surface now.
  try {
    switch (c.experiment) {
      case Experiment::born_single: {
        const auto spec = c.single_signal();
        if (c.model.basis_angle != 0.0 && spec.channels() != 2)
          invalid("model.basis_angle", "basis rotations are defined for m = 2");
        break;
      }
      case Experiment::appendix_check: break;
      case Experiment::mean_times:
        if (c.model_kind() != ModelKind::scalar) invalid("model.kind", "mean-times uses a scalar model");
        if (c.model.sigma12 && c.model.sigma12->size() != 1) invalid("model.sigma12", "expected one entry");
        c.correlation_model();
        break;
      default: {
        const auto model = c.correlation_model();
        if ((c.model.angles[0] != 0.0 || c.model.angles[1] != 0.0) && model.dim() != 2)
          invalid("model.angles", "basis rotations are defined for m = 2");
        if (c.experiment == Experiment::chsh && model.dim() != 2) invalid("model", "chsh needs m = 2");
        if (c.experiment == Experiment::marginals && model.mode() != MatchingMode::matrix_matched)
          invalid("model.kind", "marginals need a matrix-matched model");
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::validation_error) throw;
    throw Error(Errc::validation_error, "invalid model: " + std::string(e.what()));
  }
}

std::array<double, 4> parse_angles(std::string_view text) {
  std::array<double, 4> out{};
  std::size_t k = 0;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (k == 4) invalid("--angles", "expected exactly four comma-separated values");
    try {
      std::size_t used = 0;
      out[k] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      invalid("--angles", "'" + item + "' is not a number");
    }
    ++k;
  }
  if (k != 4) invalid("--angles", "expected exactly four comma-separated values");
  return out;
}

}  // namespace tsd::harness
