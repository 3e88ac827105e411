#pragma once

// The command layer behind the `catalyst` executable. Each command is a
// pure function of its RunConfig and input files: rerunning it rewrites the
// same bytes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catalyst/baselines.hpp"
#include "catalyst/defaults.hpp"
#include "catalyst/fusion.hpp"
#include "catalyst/gamma.hpp"
#include "catalyst/report.hpp"
#include "catalyst/synth_lab.hpp"

namespace catalyst {

struct BaselineOverrides {
  std::optional<double> react_percentile;
  std::optional<double> dice_sparsity;
  std::optional<double> ash_percentile;
  std::optional<double> scale_percentile;
  std::optional<std::size_t> knn_k;
};

struct RunConfig {
  Preset preset = Preset::kCifar;
  std::string backbone = "resnet18";

  // Manifest paths (file or containing directory).
  std::optional<std::filesystem::path> id_train;
  std::optional<std::filesystem::path> id_val;
  std::optional<std::filesystem::path> id_test;
  std::optional<std::filesystem::path> proxy;
  std::vector<std::pair<std::string, std::filesystem::path>> ood;  // report column name, path

  BaselineMethod baseline = BaselineMethod::kEnergy;
  ChannelStatistic statistic = ChannelStatistic::kMax;
  FusionMode fusion = FusionMode::kMultiplicative;
  std::optional<double> percentile_p;  // empty: preset default
  bool sweep = false;                  // select p on the proxy split instead
  std::string grid = "10:100:5";
  BaselineOverrides baseline_params;

  // Use this profile instead of calibrating.
  std::optional<std::filesystem::path> profile;
  std::filesystem::path output_dir = "run";
  std::optional<std::uint64_t> seed;
  std::optional<SynthSpec> synth;
  bool allow_negative = false;
};

// Relative paths in the file resolve against the file's directory. Unknown
// keys are rejected.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig run_config_from_json(std::string_view text, const std::filesystem::path& base_dir);

// Command-line values; each one set replaces the config value.
struct CliOverrides {
  std::optional<std::string> baseline;
  std::optional<std::string> statistic;
  std::optional<std::string> fusion;
  std::optional<std::string> p;  // number or "sweep"
  std::optional<std::string> grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

double resolved_percentile(const RunConfig& config);
BaselineConfig resolved_baseline_config(const RunConfig& config);

struct CalibrateResult {
  CalibrationProfile profile;
  std::optional<SweepResult> sweep;
};

// Writes output_dir/profile.json, plus sweep.csv when sweeping.
CalibrateResult cmd_calibrate(const RunConfig& config);
// cmd_calibrate with the sweep forced on.
CalibrateResult cmd_sweep(const RunConfig& config);

struct NamedScores {
  std::string split;
  ScoredSplit scores;
};

// Scores id_test and every OOD split; writes output_dir/scores.csv.
std::vector<NamedScores> cmd_score(const RunConfig& config);

// Scores and evaluates one (baseline, statistic, fusion) cell against every
// OOD split and upserts the rows into output_dir/report.csv.
std::vector<ReportRow> cmd_eval(const RunConfig& config);

// Writes the synthetic benchmark under output_dir/data/, the spec used to
// output_dir/synth.json and a ready-to-run output_dir/run.json.
std::vector<DatasetManifest> cmd_synth(const RunConfig& config);

// Renders output_dir/report.csv into output_dir/report.md and returns it.
std::string cmd_report(const RunConfig& config);

}  // namespace catalyst
