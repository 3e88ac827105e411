#pragma once

// Combines γ with a baseline score and scores whole splits.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catalyst/baselines.hpp"
#include "catalyst/feature_store.hpp"
#include "catalyst/gamma.hpp"

namespace catalyst {

enum class FusionMode {
  kNone,             // baseline score unchanged
  kMultiplicative,   // γ · S
  kAdditive,         // γ + S
  kKnnDivide,        // S / γ, distance scores only
  kStandaloneGamma,  // γ alone
};

std::string_view to_string(FusionMode mode) noexcept;
FusionMode parse_fusion(std::string_view text);

// Throws kInvalidArgument for a non-positive γ in division mode.
double fuse(double gamma, double base_score, FusionMode mode);

// Multiplicative/Additive need an ID-high (logit) baseline; KnnDivide needs
// KNN. Throws kIncompatible otherwise.
void check_compatible(BaselineMethod method, FusionMode mode);

// Polarity of the fused score.
bool fused_higher_is_id(BaselineMethod method, FusionMode mode);

// e.g. "Energy", "Energy * Catalyst(max)", "KNN / Catalyst(mean)".
std::string method_label(BaselineMethod method, std::optional<ChannelStatistic> stat,
                         FusionMode mode);
std::string_view display_name(BaselineMethod method) noexcept;

struct SampleScore {
  std::size_t index = 0;
  double raw_base = 0.0;
  double gamma = 0.0;  // NaN when no profile was supplied (mode kNone)
  double fused = 0.0;
};

struct ScoredSplit {
  std::string method_label;
  bool higher_is_id = true;
  std::vector<SampleScore> samples;

  std::vector<double> fused_scores() const;
  std::vector<double> gammas() const;
  std::vector<double> base_scores() const;
};

// Per sample: statistic -> γ -> baseline score -> fused score. Runs in
// parallel across samples; output order follows the dataset.
// `profile` may be empty only for mode kNone.
ScoredSplit score_dataset(const Dataset& split, const FittedBaseline& baseline,
                          const std::optional<CalibrationProfile>& profile, FusionMode mode);

// Statistic vectors for every sample of a split, in parallel.
std::vector<StatVector> compute_stats(const Dataset& split, ChannelStatistic kind);

// CSV with header split,sample_index,raw_base,gamma,fused.
void write_scores_csv(const std::filesystem::path& file,
                      const std::vector<std::pair<std::string, const ScoredSplit*>>& splits);

}  // namespace catalyst
