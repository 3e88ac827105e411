#pragma once

// Shipped hyperparameter defaults for the two benchmark presets. The same
// numbers are mirrored in config/*.json; any value there or on the command
// line overrides these.

#include <string_view>

#include "catalyst/baselines.hpp"
#include "catalyst/channel_stats.hpp"

namespace catalyst {

enum class Preset { kCifar, kImagenet };

std::string_view to_string(Preset preset) noexcept;
Preset parse_preset(std::string_view text);

// Percentile p for γ's clipping threshold.
//   CIFAR: mean 60, std 95, max 95 (median follows mean).
//   ImageNet: 75, except when fused with ReAct or ReAct+DICE, where one p is
//   shared per backbone family: resnet 15, mobilenet 35, densenet 52.
// Entropy is never clipped, so its p is only recorded (100).
double default_gamma_percentile(Preset preset, ChannelStatistic stat, BaselineMethod baseline,
                                std::string_view backbone);

// Baseline hyperparameters. ReAct clips at p=90 alone and p=95 when fused;
// DICE keeps 30% (p=70); ASH prunes at p=90 (80 for CIFAR ResNets); SCALE
// at p=85; KNN uses k=50.
BaselineConfig default_baseline_config(Preset preset, BaselineMethod method, bool fused,
                                       std::string_view backbone);

}  // namespace catalyst
