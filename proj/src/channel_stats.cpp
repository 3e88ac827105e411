#include "catalyst/channel_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "catalyst/error.hpp"
#include "catalyst/kernels.hpp"

namespace catalyst {

std::string_view to_string(ChannelStatistic kind) noexcept {
  switch (kind) {
    case ChannelStatistic::kMean:
      return "mean";
    case ChannelStatistic::kStd:
      return "std";
    case ChannelStatistic::kMax:
      return "max";
    case ChannelStatistic::kMedian:
      return "median";
    case ChannelStatistic::kEntropy:
      return "entropy";
  }
  return "unknown";
}

ChannelStatistic parse_statistic(std::string_view text) {
  for (auto k : {ChannelStatistic::kMean, ChannelStatistic::kStd, ChannelStatistic::kMax,
                 ChannelStatistic::kMedian, ChannelStatistic::kEntropy}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown statistic: " + std::string(text));
}

StatVector channel_mean(const ActivationMap& map) {
  const auto& k = kernels::active();
  const double count = static_cast<double>(map.spatial_size());
  StatVector out{ChannelStatistic::kMean, std::vector<double>(map.channels())};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = k.sum(map.channel(i)) / count;
  }
  return out;
}

StatVector channel_std(const ActivationMap& map) {
  const auto& k = kernels::active();
  const double count = static_cast<double>(map.spatial_size());
  StatVector out{ChannelStatistic::kStd, std::vector<double>(map.channels())};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto ch = map.channel(i);
    const double mean = k.sum(ch) / count;
    out.values[i] = std::sqrt(k.sum_sq_dev(ch, mean) / count);
  }
  return out;
}

StatVector channel_max(const ActivationMap& map) {
  const auto& k = kernels::active();
  StatVector out{ChannelStatistic::kMax, std::vector<double>(map.channels())};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = static_cast<double>(k.max(map.channel(i)));
  }
  return out;
}

StatVector channel_median(const ActivationMap& map) {
  const auto& k = kernels::active();
  StatVector out{ChannelStatistic::kMedian, std::vector<double>(map.channels())};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = k.median(map.channel(i));
  return out;
}

StatVector channel_entropy(const ActivationMap& map) {
  const auto& k = kernels::active();
  StatVector out{ChannelStatistic::kEntropy, std::vector<double>(map.channels())};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto ch = map.channel(i);
    const double total = k.sum(ch);
    if (total <= 0.0) {
      out.values[i] = 0.0;
      continue;
    }
    const double h = k.entropy(ch, total);
    // Rounding can push a one-hot or uniform channel a hair past [0, ln k²].
    out.values[i] = std::clamp(h, 0.0, std::log(static_cast<double>(ch.size())));
  }
  return out;
}

StatVector compute_stat(const ActivationMap& map, ChannelStatistic kind) {
  switch (kind) {
    case ChannelStatistic::kMean:
      return channel_mean(map);
    case ChannelStatistic::kStd:
      return channel_std(map);
    case ChannelStatistic::kMax:
      return channel_max(map);
    case ChannelStatistic::kMedian:
      return channel_median(map);
    case ChannelStatistic::kEntropy:
      return channel_entropy(map);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown statistic");
}

}  // namespace catalyst
