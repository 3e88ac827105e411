#include "catalyst/fusion.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "catalyst/error.hpp"
#include "catalyst/parallel.hpp"
#include "catalyst/report.hpp"

namespace catalyst {

std::string_view to_string(FusionMode mode) noexcept {
  switch (mode) {
    case FusionMode::kNone:
      return "none";
    case FusionMode::kMultiplicative:
      return "mul";
    case FusionMode::kAdditive:
      return "add";
    case FusionMode::kKnnDivide:
      return "div";
    case FusionMode::kStandaloneGamma:
      return "gamma";
  }
  return "unknown";
}

FusionMode parse_fusion(std::string_view text) {
  for (auto m : {FusionMode::kNone, FusionMode::kMultiplicative, FusionMode::kAdditive,
                 FusionMode::kKnnDivide, FusionMode::kStandaloneGamma}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown fusion mode: " + std::string(text) + " (none|mul|add|div|gamma)");
}

double fuse(double gamma, double base_score, FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone:
      return base_score;
    case FusionMode::kMultiplicative:
      return gamma * base_score;
    case FusionMode::kAdditive:
      return gamma + base_score;
    case FusionMode::kKnnDivide:
      if (!(gamma > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument, "division fusion needs gamma > 0");
      }
      return base_score / gamma;
    case FusionMode::kStandaloneGamma:
      return gamma;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown fusion mode");
}

void check_compatible(BaselineMethod method, FusionMode mode) {
  const bool distance = !higher_is_id(method);
  if (mode == FusionMode::kKnnDivide && !distance) {
    throw Error(ErrorCode::kIncompatible,
                "division fusion applies only to the KNN distance score, not " +
                    std::string(to_string(method)));
  }
  if ((mode == FusionMode::kMultiplicative || mode == FusionMode::kAdditive) && distance) {
    throw Error(ErrorCode::kIncompatible,
                std::string(to_string(mode)) +
                    " fusion needs a higher-is-ID score; use div with knn");
  }
}

bool fused_higher_is_id(BaselineMethod method, FusionMode mode) {
  return mode == FusionMode::kStandaloneGamma ? true : higher_is_id(method);
}

std::string_view display_name(BaselineMethod method) noexcept {
  switch (method) {
    case BaselineMethod::kMsp:
      return "MSP";
    case BaselineMethod::kEnergy:
      return "Energy";
    case BaselineMethod::kReact:
      return "ReAct";
    case BaselineMethod::kDice:
      return "DICE";
    case BaselineMethod::kReactDice:
      return "ReAct+DICE";
    case BaselineMethod::kAsh:
      return "ASH";
    case BaselineMethod::kScale:
      return "SCALE";
    case BaselineMethod::kKnn:
      return "KNN";
  }
  return "?";
}

std::string method_label(BaselineMethod method, std::optional<ChannelStatistic> stat,
                         FusionMode mode) {
  const std::string base(display_name(method));
  if (mode == FusionMode::kNone || !stat) return base;
  const std::string g = "Catalyst(" + std::string(to_string(*stat)) + ")";
  switch (mode) {
    case FusionMode::kMultiplicative:
      return base + " * " + g;
    case FusionMode::kAdditive:
      return base + " + " + g;
    case FusionMode::kKnnDivide:
      return base + " / " + g;
    case FusionMode::kStandaloneGamma:
      return g;
    case FusionMode::kNone:
      break;
  }
  return base;
}

std::vector<double> ScoredSplit::fused_scores() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.fused);
  return out;
}

std::vector<double> ScoredSplit::gammas() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.gamma);
  return out;
}

std::vector<double> ScoredSplit::base_scores() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.raw_base);
  return out;
}

std::vector<StatVector> compute_stats(const Dataset& split, ChannelStatistic kind) {
  std::vector<StatVector> out(split.maps.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = compute_stat(split.maps[i], kind); });
  return out;
}

ScoredSplit score_dataset(const Dataset& split, const FittedBaseline& baseline,
                          const std::optional<CalibrationProfile>& profile, FusionMode mode) {
  check_compatible(baseline.method(), mode);
  if (!profile && mode != FusionMode::kNone) {
    throw Error(ErrorCode::kInvalidArgument, "fusion needs a calibration profile");
  }
  if (split.maps.size() != split.logits.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "split has mismatched maps and logits");
  }

  ScoredSplit out;
  out.method_label = method_label(baseline.method(),
                                  profile ? std::optional(profile->kind) : std::nullopt, mode);
  out.higher_is_id = fused_higher_is_id(baseline.method(), mode);
  out.samples.resize(split.maps.size());

  parallel_for(split.maps.size(), [&](std::size_t i) {
    const ActivationMap& map = split.maps[i];
    const StatVector feature = channel_mean(map);
    SampleScore& s = out.samples[i];
    s.index = i;
    s.raw_base = baseline.score(feature, split.logits[i].values);
    s.gamma = std::numeric_limits<double>::quiet_NaN();
    if (profile) {
      s.gamma = profile->kind == ChannelStatistic::kMean
                    ? compute_gamma(feature, *profile)
                    : compute_gamma(compute_stat(map, profile->kind), *profile);
    }
    s.fused = fuse(s.gamma, s.raw_base, mode);
  });
  return out;
}

void write_scores_csv(const std::filesystem::path& file,
                      const std::vector<std::pair<std::string, const ScoredSplit*>>& splits) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << "split,sample_index,raw_base,gamma,fused\n";
  for (const auto& [name, split] : splits) {
    for (const auto& s : split->samples) {
      out << name << ',' << s.index << ',' << format_number(s.raw_base) << ','
          << format_number(s.gamma) << ',' << format_number(s.fused) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + file.string());
}

}  // namespace catalyst
