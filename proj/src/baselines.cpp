#include "catalyst/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "catalyst/error.hpp"
#include "catalyst/gamma.hpp"
#include "catalyst/kernels.hpp"

namespace catalyst {
namespace {

constexpr std::string_view kMaskMagic = "CATM";
constexpr std::string_view kKnnMagic = "CATK";

void require_mean(const StatVector& feature, std::string_view who) {
  if (feature.kind != ChannelStatistic::kMean) {
    throw Error(ErrorCode::kIncompatible,
                std::string(who) + " expects the channel-mean feature, got " +
                    std::string(to_string(feature.kind)));
  }
}

void require_prune_percentile(double p) {
  if (!(p >= 0.0 && p < 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pruning percentile must lie in [0, 100)");
  }
}

struct PruneSums {
  double threshold;
  double total;
  double kept;
};

PruneSums prune_sums(const StatVector& feature, double p) {
  require_mean(feature, "ASH/SCALE");
  require_prune_percentile(p);
  PruneSums s{percentile(feature.values, p), 0.0, 0.0};
  for (double v : feature.values) {
    if (v < 0.0) throw Error(ErrorCode::kInvalidValue, "ASH/SCALE need non-negative features");
    s.total += v;
    if (v >= s.threshold) s.kept += v;
  }
  if (!(s.kept > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "every activation was pruned (p too high for sample)");
  }
  return s;
}

template <typename T>
double energy_impl(std::span<const T> logits) {
  if (logits.empty()) throw Error(ErrorCode::kEmptyInput, "energy of empty logits");
  const double top = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  double acc = 0.0;
  for (T v : logits) acc += std::exp(static_cast<double>(v) - top);
  return top + std::log(acc);
}

template <typename T>
double msp_impl(std::span<const T> logits) {
  if (logits.empty()) throw Error(ErrorCode::kEmptyInput, "msp of empty logits");
  const double top = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  double acc = 0.0;
  for (T v : logits) acc += std::exp(static_cast<double>(v) - top);
  // The arg-max term contributes exp(0) = 1 to the numerator.
  return 1.0 / acc;
}

}  // namespace

std::vector<double> apply_head(const StatVector& feature, const ClassifierHead& head) {
  require_mean(feature, "apply_head");
  if (feature.values.size() != head.channels) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature length " + std::to_string(feature.values.size()) +
                    " != head channels " + std::to_string(head.channels));
  }
  std::vector<double> logits(head.bias.begin(), head.bias.end());
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < feature.values.size(); ++i) {
    if (feature.values[i] != 0.0) k.axpy(feature.values[i], head.row(i), logits);
  }
  return logits;
}

double msp(std::span<const double> logits) { return msp_impl(logits); }
double msp(std::span<const float> logits) { return msp_impl(logits); }
double energy(std::span<const double> logits) { return energy_impl(logits); }
double energy(std::span<const float> logits) { return energy_impl(logits); }

StatVector react_clip(const StatVector& feature, double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ReAct threshold must be > 0");
  StatVector out = feature;
  for (double& v : out.values) v = std::min(v, c);
  return out;
}

std::size_t DiceMask::kept_in_column(std::size_t cls) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < channels; ++i) count += kept(i, cls) ? 1 : 0;
  return count;
}

DiceMask dice_build(const ClassifierHead& head, std::span<const StatVector> id_features,
                    double sparsity_p) {
  if (id_features.empty()) throw Error(ErrorCode::kEmptyInput, "DICE needs ID features");
  if (!(sparsity_p >= 0.0 && sparsity_p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "DICE sparsity must lie in [0, 100]");
  }
  const std::size_t n = head.channels;
  const std::size_t classes = head.classes;
  std::vector<double> mean_h(n, 0.0);
  for (const auto& f : id_features) {
    require_mean(f, "dice_build");
    if (f.values.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "DICE feature length != head channels");
    }
    for (std::size_t i = 0; i < n; ++i) mean_h[i] += f.values[i];
  }
  for (double& v : mean_h) v /= static_cast<double>(id_features.size());

  DiceMask mask;
  mask.channels = head.channels;
  mask.classes = head.classes;
  mask.sparsity_p = sparsity_p;
  mask.keep.assign(n * classes, 0);
  const auto keep_count = static_cast<std::size_t>(
      std::llround((100.0 - sparsity_p) * static_cast<double>(n) / 100.0));

  // E[w ⊙ h] = w ⊙ E[h] since w is fixed.
  std::vector<std::size_t> order(n);
  std::vector<double> contribution(n);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      contribution[i] = static_cast<double>(head.weights[i * classes + c]) * mean_h[i];
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return contribution[a] > contribution[b];
    });
    for (std::size_t r = 0; r < keep_count; ++r) mask.keep[order[r] * classes + c] = 1;
  }
  return mask;
}

double dice_score(const StatVector& feature, const ClassifierHead& head, const DiceMask& mask) {
  require_mean(feature, "dice_score");
  if (feature.values.size() != head.channels || mask.channels != head.channels ||
      mask.classes != head.classes) {
    throw Error(ErrorCode::kDimensionMismatch, "DICE shapes disagree");
  }
  std::vector<double> logits(head.bias.begin(), head.bias.end());
  for (std::size_t i = 0; i < head.channels; ++i) {
    const double h = feature.values[i];
    for (std::size_t c = 0; c < head.classes; ++c) {
      if (mask.kept(i, c)) logits[c] += static_cast<double>(head.weights[i * head.classes + c]) * h;
    }
  }
  return energy(logits);
}

StatVector ash_s(const StatVector& feature, double prune_p) {
  require_mean(feature, "ASH/SCALE");
  if (prune_p == 0.0) return feature;
  const PruneSums s = prune_sums(feature, prune_p);
  const double factor = std::exp(s.total / s.kept);
  StatVector out = feature;
  for (double& v : out.values) v = v < s.threshold ? 0.0 : v * factor;
  return out;
}

StatVector scale_shape(const StatVector& feature, double prune_p) {
  require_mean(feature, "ASH/SCALE");
  if (prune_p == 0.0) return feature;
  const PruneSums s = prune_sums(feature, prune_p);
  const double factor = std::exp(s.total / s.kept);
  StatVector out = feature;
  for (double& v : out.values) v *= factor;
  return out;
}

KnnIndex::KnnIndex(std::vector<double> features, std::size_t dim, std::size_t k)
    : features_(std::move(features)), dim_(dim), k_(k) {
  if (dim == 0 || features_.size() % dim != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "KNN feature buffer is not N x dim");
  }
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "KNN needs k >= 1");
  if (size() < k) {
    throw Error(ErrorCode::kEmptyInput, "insufficient training features: N=" +
                                            std::to_string(size()) + " < k=" + std::to_string(k));
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidValue, "non-finite KNN feature");
  }
}

KnnIndex knn_build(std::span<const StatVector> id_train_features, std::size_t k) {
  if (id_train_features.empty()) {
    throw Error(ErrorCode::kEmptyInput, "insufficient training features: none given");
  }
  const std::size_t dim = id_train_features.front().values.size();
  std::vector<double> flat;
  flat.reserve(dim * id_train_features.size());
  for (const auto& f : id_train_features) {
    require_mean(f, "knn_build");
    if (f.values.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "KNN features differ in length");
    }
    flat.insert(flat.end(), f.values.begin(), f.values.end());
  }
  return KnnIndex(std::move(flat), dim, k);
}

double knn_score(const StatVector& feature, const KnnIndex& index) {
  if (feature.values.size() != index.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query length != KNN index dimension");
  }
  const auto& kern = kernels::active();
  std::vector<double> dist(index.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    dist[i] = std::sqrt(kern.squared_distance(feature.values, index.row(i)));
  }
  const std::size_t k = index.k();
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) total += dist[j];
  return total / static_cast<double>(k);
}

void save_dice_mask(const DiceMask& mask, const std::filesystem::path& file) {
  auto bytes = detail::make_header(kMaskMagic, {mask.channels, mask.classes});
  detail::put_u64(bytes, std::bit_cast<std::uint64_t>(mask.sparsity_p));
  bytes.insert(bytes.end(), mask.keep.begin(), mask.keep.end());
  detail::write_file(file, bytes);
}

DiceMask load_dice_mask(const std::filesystem::path& file) {
  const auto bytes = detail::read_file(file);
  detail::Reader r(bytes, file.filename().string());
  r.expect_magic(kMaskMagic);
  if (r.u32() != detail::kFormatVersion) {
    throw Error(ErrorCode::kInvalidValue, "unsupported mask version");
  }
  DiceMask mask;
  mask.channels = r.u32();
  mask.classes = r.u32();
  mask.sparsity_p = r.f64();
  const auto keep = r.bytes(static_cast<std::size_t>(mask.channels) * mask.classes);
  mask.keep.assign(keep.begin(), keep.end());
  r.expect_end();
  return mask;
}

void save_knn_index(const KnnIndex& index, const std::filesystem::path& file) {
  auto bytes = detail::make_header(
      kKnnMagic, {static_cast<std::uint32_t>(index.size()), static_cast<std::uint32_t>(index.dim()),
                  static_cast<std::uint32_t>(index.k())});
  detail::put_f64s(bytes, index.data());
  detail::write_file(file, bytes);
}

KnnIndex load_knn_index(const std::filesystem::path& file) {
  const auto bytes = detail::read_file(file);
  detail::Reader r(bytes, file.filename().string());
  r.expect_magic(kKnnMagic);
  if (r.u32() != detail::kFormatVersion) {
    throw Error(ErrorCode::kInvalidValue, "unsupported KNN index version");
  }
  const std::size_t n = r.u32();
  const std::size_t dim = r.u32();
  const std::size_t k = r.u32();
  std::vector<double> features(n * dim);
  r.f64s(features);
  r.expect_end();
  return KnnIndex(std::move(features), dim, k);
}

std::string_view to_string(BaselineMethod method) noexcept {
  switch (method) {
    case BaselineMethod::kMsp:
      return "msp";
    case BaselineMethod::kEnergy:
      return "energy";
    case BaselineMethod::kReact:
      return "react";
    case BaselineMethod::kDice:
      return "dice";
    case BaselineMethod::kReactDice:
      return "react_dice";
    case BaselineMethod::kAsh:
      return "ash";
    case BaselineMethod::kScale:
      return "scale";
    case BaselineMethod::kKnn:
      return "knn";
  }
  return "unknown";
}

BaselineMethod parse_baseline(std::string_view text) {
  for (auto m : {BaselineMethod::kMsp, BaselineMethod::kEnergy, BaselineMethod::kReact,
                 BaselineMethod::kDice, BaselineMethod::kReactDice, BaselineMethod::kAsh,
                 BaselineMethod::kScale, BaselineMethod::kKnn}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown baseline: " + std::string(text));
}

bool higher_is_id(BaselineMethod method) noexcept { return method != BaselineMethod::kKnn; }

bool needs_head(BaselineMethod method) noexcept {
  switch (method) {
    case BaselineMethod::kMsp:
    case BaselineMethod::kEnergy:
    case BaselineMethod::kKnn:
      return false;
    default:
      return true;
  }
}

FittedBaseline FittedBaseline::fit(const BaselineConfig& config,
                                   std::span<const StatVector> id_train_features,
                                   const std::optional<ClassifierHead>& head) {
  FittedBaseline b;
  b.config_ = config;
  const BaselineMethod m = config.method;
  if (needs_head(m)) {
    if (!head) {
      throw Error(ErrorCode::kIncompatible,
                  std::string(to_string(m)) + " needs a classifier head in the dump");
    }
    b.head_ = head;
  }
  if (m == BaselineMethod::kReact || m == BaselineMethod::kReactDice) {
    if (id_train_features.empty()) throw Error(ErrorCode::kEmptyInput, "ReAct needs ID features");
    const auto pool = pool_values(id_train_features);
    b.react_c_ = percentile(pool, config.react_percentile);
    if (!(*b.react_c_ > 0.0)) {
      throw Error(ErrorCode::kDegenerate, "ReAct threshold from ID features is not positive");
    }
  }
  if (m == BaselineMethod::kDice || m == BaselineMethod::kReactDice) {
    b.mask_ = dice_build(*head, id_train_features, config.dice_sparsity);
  }
  if (m == BaselineMethod::kAsh) require_prune_percentile(config.ash_percentile);
  if (m == BaselineMethod::kScale) require_prune_percentile(config.scale_percentile);
  if (m == BaselineMethod::kKnn) b.knn_ = knn_build(id_train_features, config.knn_k);
  return b;
}

double FittedBaseline::score(const StatVector& feature, std::span<const float> logits) const {
  switch (config_.method) {
    case BaselineMethod::kMsp:
      return msp(logits);
    case BaselineMethod::kEnergy:
      return energy(logits);
    case BaselineMethod::kReact:
      return energy(apply_head(react_clip(feature, *react_c_), *head_));
    case BaselineMethod::kDice:
      return dice_score(feature, *head_, *mask_);
    case BaselineMethod::kReactDice:
      return dice_score(react_clip(feature, *react_c_), *head_, *mask_);
    case BaselineMethod::kAsh:
      return energy(apply_head(ash_s(feature, config_.ash_percentile), *head_));
    case BaselineMethod::kScale:
      return energy(apply_head(scale_shape(feature, config_.scale_percentile), *head_));
    case BaselineMethod::kKnn:
      return knn_score(feature, *knn_);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown baseline");
}

}  // namespace catalyst
