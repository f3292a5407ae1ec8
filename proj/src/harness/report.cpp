#include "tsd/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace tsd::harness {

namespace {

std::string format_g6(double value) {
  if (!std::isfinite(value)) return "nan";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value == 0.0 ? 0.0 : value);
  return buffer;
}

Document matrix_document(const CMatrixXd& m) {
  Document rows = Document::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back({number(m(i, j).real()), number(m(i, j).imag())});
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int Report::exit_code() const {
  if (check_failed) return 1;
  return regime_violation ? 2 : 0;
}

Document number(double value) {
  if (!std::isfinite(value)) return nullptr;
  // The shortest round-trip form of the rounded value has at most 6 digits.
  return std::stod(format_g6(value));
}

Document config_document(const ExperimentConfig& c) {
  Document model;
  if (c.experiment != Experiment::born_single && c.experiment != Experiment::appendix_check)
    model["kind"] = to_string(c.model_kind());
  if (c.experiment == Experiment::born_single) {
    model["power"] = matrix_document(c.single_signal().power());
    model["basis_angle"] = number(c.model.basis_angle);
  } else if (c.model.sigma12) {
    model["sigma12"] = matrix_document(*c.model.sigma12);
  }
  model["e0"] = number(c.background());
  model["scale"] = number(c.model.scale);
  if (c.experiment == Experiment::born_joint || c.experiment == Experiment::marginals)
    model["angles"] = {number(c.model.angles[0]), number(c.model.angles[1])};

  Document detector;
  detector["dt"] = number(c.detector.dt);
  detector["kappa"] = number(c.detector.kappa);
  detector["threshold"] = number(c.detector.threshold);
  detector["coincidence_window"] = number(c.detector.coincidence_window);
  detector["max_time"] = number(c.detector.max_time);

  Document run;
  run["trials"] = c.trials();
  run["seed"] = c.run.seed;
  run["mode"] = c.run.mode == CountingMode::race ? "race" : "per-pair";

  Document doc;
  doc["model"] = std::move(model);
  doc["detector"] = std::move(detector);
  doc["run"] = std::move(run);
  if (c.experiment == Experiment::chsh) {
    Document angles = Document::array();
    for (double a : c.chsh.angles) angles.push_back(number(a));
    doc["chsh"] = {{"angles", std::move(angles)}};
  }
  return doc;
}

std::string render_report(const Report& report) {
  Document doc;
  doc["experiment"] = report.experiment;
  doc["config"] = report.config;
  Document tables = Document::object();
  for (const auto& table : report.tables) {
    Document rows = Document::array();
    for (const auto& row : table.rows) {
      Document r;
      r["label"] = row.label;
      if (row.count) r["count"] = *row.count;
      r["estimate"] = number(row.estimate);
      r["standard_error"] = number(row.standard_error);
      r["oracle"] = number(row.oracle);
      r["discrepancy"] = number(row.estimate - row.oracle);
      rows.push_back(std::move(r));
    }
    tables[table.name] = std::move(rows);
  }
  doc["tables"] = std::move(tables);
  doc["diagnostics"] = report.diagnostics;
  doc["regime_violation"] = report.regime_violation;
  if (report.check_failed) doc["check_failed"] = true;
  return doc.dump(2) + "\n";
}

std::string render_table(const Report& report) {
  std::string out = "table,label,count,estimate,standard_error,oracle,discrepancy\n";
  for (const auto& table : report.tables)
    for (const auto& row : table.rows) {
      out += csv_field(table.name) + "," + csv_field(row.label) + ",";
      if (row.count) out += std::to_string(*row.count);
      out += "," + format_g6(row.estimate) + "," + format_g6(row.standard_error) + "," + format_g6(row.oracle) + "," +
             format_g6(row.estimate - row.oracle) + "\n";
    }
  return out;
}

void emit_report(const Report& report, const std::string& dir, ReportFormat format) {
  const std::string text = format == ReportFormat::table ? render_table(report) : render_report(report);
  if (dir.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create output directory '" + dir + "': " + ec.message());
  const auto path = std::filesystem::path(dir) / (format == ReportFormat::table ? "report.csv" : "report.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw Error(Errc::io_error, "failed to write '" + path.string() + "'");
}

}  // namespace tsd::harness
