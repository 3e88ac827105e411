#pragma once

// Seeded synthetic ID/OOD activation maps, plus empirical checks of the
// mean-separation guarantees for multiplicative and additive fusion.
//
// Activation values are rectified Gaussians: a_s · max(0, μ + σ·z), where a_s
// is a per-sample log-normal intensity shared by every channel. Logits come
// from a fixed random head so the logit baselines are non-trivial.
// Generation is a pure function of the SynthSpec: every sample draws from its
// own counter-derived sub-seed, so output is identical for any thread count.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "catalyst/feature_store.hpp"

namespace catalyst {

struct SynthSpec {
  std::uint32_t n_channels = 64;
  std::uint32_t spatial_k = 7;
  std::uint32_t n_samples_id = 500;
  std::uint32_t n_samples_ood = 500;
  double id_channel_mean = 1.0;
  double ood_channel_mean = 0.75;
  double id_spread = 1.0;
  double ood_spread = 0.6;
  std::uint64_t seed = 0;
  std::uint32_t n_classes = 10;
  double intensity_jitter = 0.2;    // σ of log a_s
  double head_weight_mean = 0.5;    // W = (mean + spread·z) / √n
  double head_weight_spread = 1.0;
  // Proxy-OOD split: ID parameters moved this fraction of the way toward the
  // OOD ones, a weaker version of the real shift.
  double proxy_shift = 0.5;

  void validate() const;
};

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(std::string_view text);
SynthSpec load_synth_spec(const std::filesystem::path& file);

struct SynthPair {
  ClassifierHead head;
  Dataset id;
  Dataset ood;
};

// ID and OOD splits sharing one head.
SynthPair generate(const SynthSpec& spec);

// Full benchmark: id_train, id_val, id_test (n_samples_id each), ood
// (n_samples_ood) and a proxy-OOD split (see proxy_shift).
struct SynthBenchmark {
  ClassifierHead head;
  Dataset id_train;
  Dataset id_val;
  Dataset id_test;
  Dataset ood;
  Dataset proxy;
};

SynthBenchmark generate_benchmark(const SynthSpec& spec);

// Writes each split as a dump under dir/<split>/ and returns the manifests
// in the order id_train, id_val, id_test, ood, proxy.
std::vector<DatasetManifest> write_benchmark(const SynthBenchmark& bench,
                                             const std::filesystem::path& dir);

// Independent (γ, S) draws for exercising the separation checks directly.
struct ScorePairSpec {
  std::size_t n_in = 1000;
  std::size_t n_out = 1000;
  double gamma_in_mean = 2.0;
  double gamma_out_mean = 1.5;
  double gamma_spread = 0.2;
  double score_in_mean = 3.0;
  double score_out_mean = 2.0;
  double score_spread = 1.0;
  std::uint64_t seed = 0;
};

struct ScorePairs {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
  std::vector<double> id_gammas;
  std::vector<double> ood_gammas;
};

ScorePairs generate_score_pairs(const ScorePairSpec& spec);

struct SeparationReport {
  double delta_original = 0.0;  // mean S_in - mean S_out
  double delta_scaled = 0.0;    // same for γ·S
  double delta_shift = 0.0;     // same for γ + S
  double gamma_bar_in = 0.0;
  double gamma_bar_out = 0.0;
  double covariance_in = 0.0;   // sample covariance of (γ, S), divisor N-1
  double covariance_out = 0.0;
  double score_bar_in = 0.0;
  // Three standard errors of (mean γS_in - mean γS_out).
  double scaled_slack = 0.0;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};

// Inputs must be non-empty with matching lengths per split and share the
// ID-high polarity.
SeparationReport measure_separations(std::span<const double> id_scores,
                                     std::span<const double> ood_scores,
                                     std::span<const double> id_gammas,
                                     std::span<const double> ood_gammas);

enum class TheoremStatus { kHolds, kAssumptionsViolated, kFails };

std::string_view to_string(TheoremStatus status) noexcept;

struct TheoremVerdict {
  TheoremStatus status = TheoremStatus::kHolds;
  std::string clause;  // violated assumption or failed theorem; empty on kHolds
  bool scaled_bound_ok = false;   // Δ_scaled >= γ̄_out·Δ_original - slack
  bool shift_bound_ok = false;    // Δ_shift >= Δ_original (up to rounding)
};

// |(Δ_shift - Δ_original) - (γ̄_in - γ̄_out)| relative to the largest of the
// four magnitudes involved. Linearity makes this zero up to rounding.
double shift_identity_error(const SeparationReport& report);

// Assumptions, in order: Δ_original >= 0; γ̄_in >= γ̄_out; γ̄_out >= 1;
// |cov| <= tolerance·|Δ_original| in both splits; mean ID score >= 0 (the
// multiplicative bound scales the ID mean by γ̄_in - γ̄_out). Then both bounds.
// The multiplicative bound is statistical (scaled_slack); the additive one
// is exact up to 1e-9 relative rounding.
TheoremVerdict verify_theorems(const SeparationReport& report,
                               double assumption_tolerance = 0.05);

}  // namespace catalyst
