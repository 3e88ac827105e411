#include "catalyst/defaults.hpp"

#include <string>

#include "catalyst/error.hpp"

namespace catalyst {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::string_view to_string(Preset preset) noexcept {
  return preset == Preset::kCifar ? "cifar" : "imagenet";
}

Preset parse_preset(std::string_view text) {
  if (text == "cifar") return Preset::kCifar;
  if (text == "imagenet") return Preset::kImagenet;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown preset: " + std::string(text) + " (cifar|imagenet)");
}

double default_gamma_percentile(Preset preset, ChannelStatistic stat, BaselineMethod baseline,
                                std::string_view backbone) {
  if (stat == ChannelStatistic::kEntropy) return 100.0;
  if (preset == Preset::kCifar) {
    switch (stat) {
      case ChannelStatistic::kMean:
      case ChannelStatistic::kMedian:
        return 60.0;
      default:
        return 95.0;
    }
  }
  if (baseline == BaselineMethod::kReact || baseline == BaselineMethod::kReactDice) {
    if (starts_with(backbone, "resnet")) return 15.0;
    if (starts_with(backbone, "mobilenet")) return 35.0;
    if (starts_with(backbone, "densenet")) return 52.0;
  }
  return 75.0;
}

BaselineConfig default_baseline_config(Preset preset, BaselineMethod method, bool fused,
                                       std::string_view backbone) {
  BaselineConfig c;
  c.method = method;
  c.react_percentile = fused ? 95.0 : 90.0;
  c.dice_sparsity = 70.0;
  c.ash_percentile =
      preset == Preset::kCifar && starts_with(backbone, "resnet") ? 80.0 : 90.0;
  c.scale_percentile = 85.0;
  c.knn_k = 50;
  return c;
}

}  // namespace catalyst
