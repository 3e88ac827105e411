#pragma once

// report.csv rows and their Markdown rendering.

#include <filesystem>
#include <string>
#include <vector>

#include "catalyst/metrics.hpp"

namespace catalyst {

// Shortest round-trip decimal form ("nan"/"inf"/"-inf" for non-finite).
std::string format_number(double value);

struct ReportRow {
  std::string method;     // display label, e.g. "Energy * Catalyst(max)"
  std::string baseline;   // grouping key, e.g. "energy"
  std::string statistic;  // "" for an unfused baseline
  std::string fusion;
  std::string dataset;    // OOD split name
  EvalReport report;
};

// Inserts or replaces the row keyed by (method, dataset); rewriting the
// same cell leaves the file byte-identical.
void upsert_report_row(const std::filesystem::path& file, const ReportRow& row);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& file);
void write_report_csv(const std::filesystem::path& file, const std::vector<ReportRow>& rows);

// One line per method with FPR95/AUROC pairs (percent) per dataset plus an
// Average pair. Methods are grouped by baseline (first-seen order) and
// sorted by average FPR95 within a group; the best value of each column is
// bold.
std::string render_markdown(const std::vector<ReportRow>& rows);

}  // namespace catalyst
