#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tsd/error.hpp"
#include "tsd/harness/config.hpp"
#include "tsd/harness/experiments.hpp"
#include "tsd/harness/report.hpp"

using namespace tsd;
using namespace tsd::harness;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string command = std::string(TSD_SIM_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) r.out.append(buffer.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tsd_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = temp_dir(name) / "config.json";
  std::ofstream(path) << text;
  return path.string();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults of an empty config") {
  const auto c = parse_config("{}", Experiment::born_single);
  CHECK(c.detector.dt == 0.01);
  CHECK(c.detector.kappa == 0.04);
  CHECK(c.detector.threshold == 50.0);
  CHECK(c.background() == 0.0);
  CHECK(c.trials() == 15000);
  CHECK(c.model_kind() == ModelKind::singlet);
  CHECK(parse_config("{}", Experiment::chsh).background() == 25.0);
  CHECK(parse_config("{}", Experiment::mean_times).model_kind() == ModelKind::scalar);
  validate(c);
}

TEST_CASE("kappa off the time grid is a validation error") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"detector": {"kappa": 0.035}})", Experiment::born_single),
                       doctest::Contains("detector.kappa"), Error);
  auto c = parse_config("{}", Experiment::born_single);
  c.detector.kappa = 0.035;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("ValidationError"), Error);
}

TEST_CASE("unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"sigma13": 1}})", Experiment::born_joint),
                       doctest::Contains("sigma13"), Error);
  CHECK_THROWS_AS(parse_config(R"({"detektor": {}})", Experiment::born_joint), Error);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_config("{\n  \"run\": {\n    \"seed\": ,\n  }\n}", Experiment::chsh, "bad.json");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
  }
}

TEST_CASE("a config naming another experiment is rejected") {
  CHECK_THROWS_AS(parse_config(R"({"experiment": "chsh"})", Experiment::born_single), Error);
  CHECK_NOTHROW(parse_config(R"({"experiment": "chsh"})", Experiment::chsh));
}

TEST_CASE("matrix entries accept reals and [re, im] pairs") {
  const auto c = parse_config(R"({"model": {"kind": "matrix", "sigma12": [0.5, [0, 0.5], 0, 1]}})",
                              Experiment::born_joint);
  REQUIRE(c.model.sigma12.has_value());
  CHECK((*c.model.sigma12)(0, 1) == cdouble(0.0, 0.5));
  CHECK((*c.model.sigma12)(1, 1) == cdouble(1.0, 0.0));
  CHECK_THROWS_AS(parse_config(R"({"model": {"sigma12": [1, 2, 3]}})", Experiment::born_joint), Error);
}

TEST_CASE("overrides replace file values") {
  auto c = parse_config(R"({"run": {"seed": 3, "workers": 2}})", Experiment::chsh);
  Overrides o;
  o.seed = 9;
  o.kappa = 0.08;
  o.angles = parse_angles("0,0.1,0.2,0.3");
  apply_overrides(c, o);
  CHECK(c.run.seed == 9);
  CHECK(c.run.workers == 2);
  CHECK(c.detector.kappa == 0.08);
  CHECK(c.chsh.angles[3] == 0.3);
  CHECK_THROWS_AS(parse_angles("0,1,2"), Error);
}

TEST_CASE("numbers are rounded to six significant digits") {
  CHECK(number(0.123456789).get<double>() == 0.123457);
  CHECK(number(123456789.0).get<double>() == 123457000.0);
  CHECK(number(std::nan("")).is_null());
}

TEST_CASE("exit codes") {
  Report r;
  CHECK(r.exit_code() == 0);
  r.regime_violation = true;
  CHECK(r.exit_code() == 2);
  r.check_failed = true;
  CHECK(r.exit_code() == 1);
}

TEST_CASE("chsh report has four correlations and S") {
  auto c = parse_config(R"({"run": {"trials": 300}})", Experiment::chsh);
  validate(c);
  const Report r = run_experiment(c);
  REQUIRE(r.tables.size() == 2);
  CHECK(r.tables[0].name == "correlations");
  CHECK(r.tables[0].rows.size() == 4);
  CHECK(r.tables[1].rows.size() == 1);
  CHECK(r.tables[1].rows[0].label == "S");
  CHECK(r.tables[1].rows[0].oracle == doctest::Approx(2.0 * std::sqrt(2.0)));
  const std::string csv = render_table(r);
  CHECK(csv.rfind("table,label,count,estimate,standard_error,oracle,discrepancy\n", 0) == 0);
}

TEST_CASE("validate-model reports the oracle tables") {
  auto c = parse_config("{}", Experiment::validate_model);
  const Report r = run_experiment(c);
  CHECK_FALSE(r.check_failed);
  CHECK(r.tables.size() == 3);
}

TEST_CASE("reports are byte-identical across worker counts") {
  const auto a = temp_dir("workers1"), b = temp_dir("workers3");
  const auto ra = run_cli("born-joint --trials 200 --workers 1 --out " + a.string());
  const auto rb = run_cli("born-joint --trials 200 --workers 3 --out " + b.string());
  CHECK(ra.status == rb.status);
  CHECK(ra.status != 1);
  const std::string ja = read_file(a / "report.json"), jb = read_file(b / "report.json");
  CHECK_FALSE(ja.empty());
  CHECK(ja == jb);
  const auto env = run_cli("born-joint --trials 200 --format table");
  setenv("TSD_WORKERS", "4", 1);
  const auto env4 = run_cli("born-joint --trials 200 --format table");
  unsetenv("TSD_WORKERS");
  CHECK(env.out == env4.out);
}

TEST_CASE("CLI errors exit with status 1") {
  CHECK(run_cli("born-single --kappa 0.035").status == 1);
  CHECK(run_cli("born-single --config /nonexistent/config.json").status == 1);
  const auto bad = write_file("bad", R"({"model": {"sigma13": 1}})");
  CHECK(run_cli("born-joint --config " + bad).status == 1);
  CHECK(run_cli("no-such-command").status != 0);
}

TEST_CASE("CLI table output and seeds") {
  const auto a = run_cli("born-single --trials 400 --seed 5 --format table");
  const auto b = run_cli("born-single --trials 400 --seed 5 --format table");
  const auto c = run_cli("born-single --trials 400 --seed 6 --format table");
  CHECK(a.status != 1);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(a.out.rfind("table,label", 0) == 0);
}
