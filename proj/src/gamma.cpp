#include "catalyst/gamma.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "catalyst/error.hpp"
#include "catalyst/kernels.hpp"
#include "json.hpp"

namespace catalyst {
namespace {

bool is_clipped(ChannelStatistic kind) { return kind != ChannelStatistic::kEntropy; }

// Percentile over a scratch buffer the caller owns; reorders it.
double percentile_inplace(std::vector<double>& values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "percentile of empty input");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile p must lie in [0, 100]");
  }
  const std::size_t n = values.size();
  const double rank = static_cast<double>(n - 1) * p / 100.0;
  const auto lo = std::min(static_cast<std::size_t>(std::floor(rank)), n - 1);
  const double frac = rank - static_cast<double>(lo);

  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double lower = values[lo];
  if (frac == 0.0 || lo + 1 == n) return lower;
  const double upper = *std::min_element(values.begin() + lo + 1, values.end());
  return lower + frac * (upper - lower);
}

}  // namespace

double percentile(std::span<const double> values, double p) {
  std::vector<double> scratch(values.begin(), values.end());
  return percentile_inplace(scratch, p);
}

std::vector<double> pool_values(std::span<const StatVector> stats) {
  std::size_t total = 0;
  for (const auto& s : stats) total += s.values.size();
  std::vector<double> pool;
  pool.reserve(total);
  for (const auto& s : stats) pool.insert(pool.end(), s.values.begin(), s.values.end());
  return pool;
}

CalibrationProfile calibrate_threshold(std::span<const StatVector> id_stats, double p,
                                       std::string source_label) {
  if (id_stats.empty()) throw Error(ErrorCode::kEmptyInput, "no calibration vectors");
  const ChannelStatistic kind = id_stats.front().kind;
  const std::size_t length = id_stats.front().values.size();
  for (const auto& s : id_stats) {
    if (s.kind != kind) {
      throw Error(ErrorCode::kIncompatible, "calibration vectors mix statistic kinds");
    }
    if (s.values.size() != length) {
      throw Error(ErrorCode::kDimensionMismatch, "calibration vectors differ in length");
    }
  }
  auto pool = pool_values(id_stats);
  CalibrationProfile profile;
  profile.kind = kind;
  profile.percentile_p = p;
  profile.n_calibration_values = pool.size();
  profile.threshold_c = percentile_inplace(pool, p);
  profile.source_label = std::move(source_label);
  if (is_clipped(kind) && !(profile.threshold_c > 0.0)) {
    std::ostringstream os;
    os << "degenerate ID data: " << p << "th percentile of " << to_string(kind)
       << " is " << profile.threshold_c << " (threshold must be > 0)";
    throw Error(ErrorCode::kDegenerate, os.str());
  }
  return profile;
}

double compute_gamma(const StatVector& stat, const CalibrationProfile& profile) {
  if (stat.kind != profile.kind) {
    throw Error(ErrorCode::kIncompatible,
                "statistic " + std::string(to_string(stat.kind)) + " does not match profile " +
                    std::string(to_string(profile.kind)));
  }
  if (!is_clipped(stat.kind)) {
    double total = 0.0;
    for (double v : stat.values) total += v;
    if (!(total > 0.0)) {
      throw Error(ErrorCode::kDegenerate, "entropy vector sums to zero");
    }
    return 1.0 / total;
  }
  return kernels::active().clipped_sum(stat.values, profile.threshold_c);
}

SweepResult sweep_percentiles(std::span<const StatVector> id_stats,
                              std::span<const double> grid, const SweepScorer& scorer,
                              std::string source_label) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyInput, "empty percentile grid");
  if (id_stats.empty()) throw Error(ErrorCode::kEmptyInput, "no calibration vectors");
  SweepResult result;
  result.rows.reserve(grid.size());
  for (double p : grid) {
    const auto profile = calibrate_threshold(id_stats, p, source_label);
    result.rows.push_back({p, profile.threshold_c, scorer(profile)});
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const auto& cand = result.rows[i].report;
    const auto& best = result.rows[result.best_index].report;
    if (cand.fpr95 < best.fpr95 || (cand.fpr95 == best.fpr95 && cand.auroc > best.auroc)) {
      result.best_index = i;
    }
  }
  return result;
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t colon = std::min(text.find(':', start), text.size());
    const auto piece = text.substr(start, colon - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc{} || ptr != piece.data() + piece.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad grid '" + std::string(text) + "'");
    }
    parts.push_back(v);
    start = colon + 1;
  }
  if (parts.size() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "grid must be lo:hi:step");
  }
  const double lo = parts[0], hi = parts[1], step = parts[2];
  if (!(step > 0.0) || hi < lo) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs step > 0 and hi >= lo");
  }
  std::vector<double> grid;
  const double slack = step * 1e-9;
  for (std::size_t i = 0;; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    if (v > hi + slack) break;
    grid.push_back(std::min(v, hi));
  }
  return grid;
}

std::string profile_to_json(const CalibrationProfile& profile) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(profile.kind));
  j["p"] = profile.percentile_p;
  j["c"] = profile.threshold_c;
  j["n_values"] = profile.n_calibration_values;
  j["source_label"] = profile.source_label;
  return j.dump(2) + "\n";
}

CalibrationProfile profile_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CalibrationProfile p;
    p.kind = parse_statistic(j.at("kind").get<std::string>());
    p.percentile_p = j.at("p").get<double>();
    p.threshold_c = j.at("c").get<double>();
    p.n_calibration_values = j.at("n_values").get<std::size_t>();
    p.source_label = j.value("source_label", std::string{});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, std::string("malformed profile: ") + e.what());
  }
}

void save_profile(const CalibrationProfile& profile, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << profile_to_json(profile);
}

CalibrationProfile load_profile(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open profile: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return profile_from_json(ss.str());
}

}  // namespace catalyst
