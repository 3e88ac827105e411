#pragma once

// Post-hoc OOD scores computable from dumped features: MSP, Energy, ReAct,
// DICE, ReAct+DICE, ASH-S, SCALE and KNN.
//
// Every logit-based score is "higher means in-distribution". KNN is a
// distance and runs the other way; consult higher_is_id() rather than
// negating it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catalyst/channel_stats.hpp"
#include "catalyst/feature_store.hpp"

namespace catalyst {

// logits = Wᵀh + b. `feature` must be a Mean statistic of length head.channels.
std::vector<double> apply_head(const StatVector& feature, const ClassifierHead& head);

// Maximum softmax probability, computed with max subtraction. C >= 1.
double msp(std::span<const double> logits);
double msp(std::span<const float> logits);

// log Σ exp(f_j), computed as max + log Σ exp(f_j - max).
double energy(std::span<const double> logits);
double energy(std::span<const float> logits);

// Element-wise min(h, c).
StatVector react_clip(const StatVector& feature, double c);

// Per class column, keeps the round((100 - p)/100 · n) channels with the
// largest mean contribution w_ic · E[h_i]; ties go to the lower channel index.
struct DiceMask {
  std::uint32_t channels = 0;
  std::uint32_t classes = 0;
  double sparsity_p = 0.0;
  std::vector<std::uint8_t> keep;  // channel-major, n x C

  bool kept(std::size_t channel, std::size_t cls) const {
    return keep[channel * classes + cls] != 0;
  }
  std::size_t kept_in_column(std::size_t cls) const;
};

DiceMask dice_build(const ClassifierHead& head, std::span<const StatVector> id_features,
                    double sparsity_p);
// Energy of (M ⊙ W)ᵀh + b.
double dice_score(const StatVector& feature, const ClassifierHead& head, const DiceMask& mask);

// ASH-S: t = percentile(h, p); zero entries < t; scale survivors by
// exp(Σh / Σsurvivors). Throws kDegenerate if every entry is pruned.
// prune_p == 0 switches the method off and returns the feature unchanged
// (ASH and SCALE then reduce to plain Energy); otherwise p is in (0, 100).
StatVector ash_s(const StatVector& feature, double prune_p);

// SCALE: same ratio as ASH-S but applied to the whole unpruned feature.
StatVector scale_shape(const StatVector& feature, double prune_p);

// Exact (brute-force) nearest-neighbour index over raw features.
class KnnIndex {
 public:
  KnnIndex() = default;
  KnnIndex(std::vector<double> features, std::size_t dim, std::size_t k);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : features_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t k() const noexcept { return k_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * dim_, dim_);
  }
  std::span<const double> data() const noexcept { return features_; }

 private:
  std::vector<double> features_;
  std::size_t dim_ = 0;
  std::size_t k_ = 0;
};

KnnIndex knn_build(std::span<const StatVector> id_train_features, std::size_t k);
// Mean Euclidean distance to the k nearest stored features (higher = OOD).
double knn_score(const StatVector& feature, const KnnIndex& index);

// Companion binary files: "CATM" (mask) and "CATK" (index).
void save_dice_mask(const DiceMask& mask, const std::filesystem::path& file);
DiceMask load_dice_mask(const std::filesystem::path& file);
void save_knn_index(const KnnIndex& index, const std::filesystem::path& file);
KnnIndex load_knn_index(const std::filesystem::path& file);

enum class BaselineMethod { kMsp, kEnergy, kReact, kDice, kReactDice, kAsh, kScale, kKnn };

std::string_view to_string(BaselineMethod method) noexcept;
BaselineMethod parse_baseline(std::string_view text);
bool higher_is_id(BaselineMethod method) noexcept;
// MSP and Energy read the dumped logits; everything else recomputes them
// through the head (KNN reads only the feature).
bool needs_head(BaselineMethod method) noexcept;

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::kEnergy;
  double react_percentile = 90.0;  // pooled ID feature percentile giving ReAct's c
  double dice_sparsity = 70.0;
  double ash_percentile = 90.0;
  double scale_percentile = 85.0;
  std::size_t knn_k = 50;
};

// A baseline with its ID-derived state (ReAct threshold, DICE mask, KNN
// index) resolved.
class FittedBaseline {
 public:
  static FittedBaseline fit(const BaselineConfig& config,
                            std::span<const StatVector> id_train_features,
                            const std::optional<ClassifierHead>& head);

  // `feature` is the Mean statistic; `logits` the dumped logits.
  double score(const StatVector& feature, std::span<const float> logits) const;

  BaselineMethod method() const noexcept { return config_.method; }
  bool higher_is_id() const noexcept { return catalyst::higher_is_id(config_.method); }
  const BaselineConfig& config() const noexcept { return config_; }
  std::optional<double> react_threshold() const noexcept { return react_c_; }
  const std::optional<DiceMask>& dice_mask() const noexcept { return mask_; }
  const std::optional<KnnIndex>& knn_index() const noexcept { return knn_; }

 private:
  BaselineConfig config_;
  std::optional<ClassifierHead> head_;
  std::optional<double> react_c_;
  std::optional<DiceMask> mask_;
  std::optional<KnnIndex> knn_;
};

}  // namespace catalyst
