#include "catalyst/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "catalyst/error.hpp"

namespace catalyst {
namespace {

constexpr std::string_view kHeader =
    "method,baseline,statistic,fusion,dataset,fpr95,auroc,lambda,n_id,n_ood";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidValue, "bad number in report: '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidValue, "bad count in report: '" + text + "'");
  }
  return v;
}

void check_field(const std::string& field) {
  if (field.find_first_of(",\n\"") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "report field may not contain ',' or quotes: " + field);
  }
}

std::string row_to_csv(const ReportRow& r) {
  for (const auto* f : {&r.method, &r.baseline, &r.statistic, &r.fusion, &r.dataset}) {
    check_field(*f);
  }
  return r.method + ',' + r.baseline + ',' + r.statistic + ',' + r.fusion + ',' + r.dataset +
         ',' + format_number(r.report.fpr95) + ',' + format_number(r.report.auroc) + ',' +
         format_number(r.report.lambda) + ',' + std::to_string(r.report.n_id) + ',' +
         std::to_string(r.report.n_ood);
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open report: " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw Error(ErrorCode::kInvalidValue, "unexpected report header in " + file.string());
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw Error(ErrorCode::kInvalidValue, "report row has " + std::to_string(f.size()) +
                                                " fields, expected 10");
    }
    ReportRow r{f[0], f[1], f[2], f[3], f[4], {}};
    r.report.fpr95 = parse_double(f[5]);
    r.report.auroc = parse_double(f[6]);
    r.report.lambda = parse_double(f[7]);
    r.report.n_id = parse_count(f[8]);
    r.report.n_ood = parse_count(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report_csv(const std::filesystem::path& file, const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& r : rows) os << row_to_csv(r) << '\n';
  std::ofstream out(file, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << os.str();
}

void upsert_report_row(const std::filesystem::path& file, const ReportRow& row) {
  std::vector<ReportRow> rows;
  if (std::filesystem::exists(file)) rows = read_report_csv(file);
  auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
    return r.method == row.method && r.dataset == row.dataset;
  });
  if (it != rows.end()) {
    *it = row;
  } else {
    rows.push_back(row);
  }
  write_report_csv(file, rows);
}

std::string render_markdown(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "no report rows to render");

  std::vector<std::string> datasets;
  struct Line {
    std::string method;
    std::string baseline;
    std::map<std::string, EvalReport> cells;
    double avg_fpr = 0.0;
    double avg_auroc = 0.0;
  };
  std::vector<Line> lines;
  std::vector<std::string> groups;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
    if (std::find(groups.begin(), groups.end(), r.baseline) == groups.end()) {
      groups.push_back(r.baseline);
    }
    auto it = std::find_if(lines.begin(), lines.end(),
                           [&](const Line& l) { return l.method == r.method; });
    if (it == lines.end()) {
      lines.push_back({r.method, r.baseline, {}, 0.0, 0.0});
      it = std::prev(lines.end());
    }
    it->cells[r.dataset] = r.report;
  }
  for (auto& l : lines) {
    for (const auto& [name, rep] : l.cells) {
      l.avg_fpr += rep.fpr95;
      l.avg_auroc += rep.auroc;
    }
    l.avg_fpr /= static_cast<double>(l.cells.size());
    l.avg_auroc /= static_cast<double>(l.cells.size());
  }
  std::stable_sort(lines.begin(), lines.end(), [&](const Line& a, const Line& b) {
    const auto ga = std::find(groups.begin(), groups.end(), a.baseline) - groups.begin();
    const auto gb = std::find(groups.begin(), groups.end(), b.baseline) - groups.begin();
    if (ga != gb) return ga < gb;
    return a.avg_fpr < b.avg_fpr;
  });

  // Column values as displayed (percent, two decimals); bolding compares
  // the displayed numbers so visually tied cells are all marked.
  const std::size_t n_cols = 2 * (datasets.size() + 1);
  std::vector<std::vector<std::optional<double>>> table(lines.size(),
                                                        std::vector<std::optional<double>>(n_cols));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      auto it = lines[i].cells.find(datasets[d]);
      if (it == lines[i].cells.end()) continue;
      table[i][2 * d] = 100.0 * it->second.fpr95;
      table[i][2 * d + 1] = 100.0 * it->second.auroc;
    }
    table[i][n_cols - 2] = 100.0 * lines[i].avg_fpr;
    table[i][n_cols - 1] = 100.0 * lines[i].avg_auroc;
  }
  const auto shown = [](double v) { return fmt::format("{:.2f}", v); };
  std::vector<std::string> best(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::optional<double> pick;
    for (const auto& row : table) {
      if (!row[c]) continue;
      const bool lower_better = c % 2 == 0;
      if (!pick || (lower_better ? *row[c] < *pick : *row[c] > *pick)) pick = row[c];
    }
    if (pick) best[c] = shown(*pick);
  }

  std::string out = "| Method |";
  std::string rule = "|---|";
  for (const auto& d : datasets) {
    out += fmt::format(" {} FPR95↓ | {} AUROC↑ |", d, d);
    rule += "---:|---:|";
  }
  out += " Average FPR95↓ | Average AUROC↑ |\n";
  rule += "---:|---:|\n";
  out += rule;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += "| " + lines[i].method + " |";
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!table[i][c]) {
        out += " - |";
        continue;
      }
      const std::string s = shown(*table[i][c]);
      out += s == best[c] ? " **" + s + "** |" : " " + s + " |";
    }
    out += '\n';
  }
  return out;
}

}  // namespace catalyst
