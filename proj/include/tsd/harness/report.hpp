#pragma once

// Experiment reports: tables of estimate/oracle rows plus free-form diagnostics,
// rendered as an ordered JSON document or a flat CSV table. Every number is
// rounded to 6 significant digits so identical content gives identical bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tsd/harness/config.hpp"

namespace tsd::harness {

using Document = nlohmann::ordered_json;

struct TableRow {
  std::string label;
  std::optional<std::int64_t> count;
  double estimate = 0.0;
  double standard_error = 0.0;
  double oracle = 0.0;
};

struct Table {
  std::string name;
  std::vector<TableRow> rows;
};

struct Report {
  std::string experiment;
  Document config;
  std::vector<Table> tables;
  Document diagnostics = Document::object();
  bool regime_violation = false;
  bool check_failed = false;  // appendix-check and validate-model verdicts

  /// 0 success, 1 failed check, 2 success with a regime flag.
  int exit_code() const;
};

/// Value rounded to 6 significant digits (non-finite values become null).
Document number(double value);

/// Echo of the resolved configuration (worker count excluded: it never changes results).
Document config_document(const ExperimentConfig& config);

std::string render_report(const Report& report);
std::string render_table(const Report& report);

/// Writes report.json or report.csv into `dir`, or to stdout when `dir` is empty.
void emit_report(const Report& report, const std::string& dir, ReportFormat format);

}  // namespace tsd::harness
