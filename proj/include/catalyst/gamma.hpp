#pragma once

// Clipping-threshold calibration and the input-dependent scaling factor γ.
//
// For the Mean/Std/Max/Median statistics γ(x) = Σᵢ min(fᵢ(x), c), where c is
// the p-th percentile of every per-channel statistic value pooled over the ID
// calibration split. For Entropy γ(x) = 1 / Σᵢ eᵢ(x) and c is unused.

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catalyst/channel_stats.hpp"
#include "catalyst/metrics.hpp"

namespace catalyst {

struct CalibrationProfile {
  ChannelStatistic kind = ChannelStatistic::kMean;
  double percentile_p = 0.0;
  double threshold_c = 0.0;
  std::size_t n_calibration_values = 0;
  std::string source_label;
};

// Linear interpolation between closest ranks at position (N-1)·p/100.
// p in [0, 100]; values must be non-empty.
double percentile(std::span<const double> values, double p);

// Flattens every value of every vector into one pool, in order.
std::vector<double> pool_values(std::span<const StatVector> stats);

// Global (all channels, all samples) percentile threshold. Throws on empty
// input, mixed kinds or lengths, and on a non-positive threshold for the
// clipped statistics.
CalibrationProfile calibrate_threshold(std::span<const StatVector> id_stats, double p,
                                       std::string source_label = {});

// Throws kIncompatible when stat.kind != profile.kind and kDegenerate when an
// entropy vector sums to zero.
double compute_gamma(const StatVector& stat, const CalibrationProfile& profile);

struct SweepRow {
  double p = 0.0;
  double threshold_c = 0.0;
  EvalReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best_index = 0;
  double best_p() const { return rows.at(best_index).p; }
};

// Scores the held-out ID split and the proxy-OOD split under a given
// profile and evaluates them.
using SweepScorer = std::function<EvalReport(const CalibrationProfile&)>;

// Calibrates on id_stats at each grid point and keeps the row with the
// lowest FPR95 (ties: higher AUROC, then the earlier grid point).
SweepResult sweep_percentiles(std::span<const StatVector> id_stats,
                              std::span<const double> grid, const SweepScorer& scorer,
                              std::string source_label = {});

// "lo:hi:step", inclusive of hi when it falls on the grid.
std::vector<double> parse_grid(std::string_view text);

std::string profile_to_json(const CalibrationProfile& profile);
CalibrationProfile profile_from_json(std::string_view text);
void save_profile(const CalibrationProfile& profile, const std::filesystem::path& file);
CalibrationProfile load_profile(const std::filesystem::path& file);

}  // namespace catalyst
