#pragma once

// Per-channel statistics of a pre-pooling activation map.

#include <string_view>
#include <vector>

#include "catalyst/feature_store.hpp"

namespace catalyst {

enum class ChannelStatistic { kMean, kStd, kMax, kMedian, kEntropy };

std::string_view to_string(ChannelStatistic kind) noexcept;
ChannelStatistic parse_statistic(std::string_view text);

// One value per channel, tagged with the statistic that produced it.
struct StatVector {
  ChannelStatistic kind = ChannelStatistic::kMean;
  std::vector<double> values;
};

// Spatial mean per channel. This is the globally average-pooled feature h(x)
// and every baseline that consumes the penultimate feature reads it from here.
StatVector channel_mean(const ActivationMap& map);

// Population standard deviation (divisor k²), two-pass.
StatVector channel_std(const ActivationMap& map);

StatVector channel_max(const ActivationMap& map);

// Even counts take the midpoint of the two middle order statistics.
StatVector channel_median(const ActivationMap& map);

// Shannon entropy (natural log) of each channel normalized to sum one.
// Zero entries contribute nothing; an all-zero channel has entropy 0.
StatVector channel_entropy(const ActivationMap& map);

StatVector compute_stat(const ActivationMap& map, ChannelStatistic kind);

}  // namespace catalyst
