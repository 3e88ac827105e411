#include "catalyst/metrics.hpp"

#include <algorithm>
#include <utility>

#include "catalyst/error.hpp"

namespace catalyst {
namespace {

// Scores re-oriented so that larger always means more ID-like. Negation is
// exact, so no information is lost.
std::vector<double> id_high(std::span<const double> scores, bool higher_is_id) {
  std::vector<double> out(scores.begin(), scores.end());
  if (!higher_is_id) {
    for (double& v : out) v = -v;
  }
  return out;
}

void require_non_empty(const ScoreSet& set) {
  if (set.id_scores.empty() || set.ood_scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "score set needs ID and OOD scores");
  }
}

}  // namespace

double threshold_lambda(std::span<const double> id_scores, double tpr_target,
                        bool higher_is_id) {
  if (id_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no ID scores");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tpr_target must lie in (0, 1]");
  }
  auto sorted = id_high(id_scores, higher_is_id);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto frac = [n](std::size_t m) {
    return static_cast<double>(m) / static_cast<double>(n);
  };
  // Smallest number of retained ID samples whose fraction reaches the target.
  auto need = static_cast<std::size_t>(tpr_target * static_cast<double>(n));
  need = std::clamp<std::size_t>(need, 1, n);
  while (need < n && frac(need) < tpr_target) ++need;
  while (need > 1 && frac(need - 1) >= tpr_target) --need;

  const double lambda = sorted[n - need];
  return higher_is_id ? lambda : -lambda;
}

double fpr_at_tpr(const ScoreSet& set, double tpr_target) {
  require_non_empty(set);
  const double lambda = threshold_lambda(set.id_scores, tpr_target, set.higher_is_id);
  std::size_t false_positives = 0;
  for (double s : set.ood_scores) {
    if (set.higher_is_id ? s >= lambda : s <= lambda) ++false_positives;
  }
  return static_cast<double>(false_positives) / static_cast<double>(set.ood_scores.size());
}

double auroc(const ScoreSet& set) {
  require_non_empty(set);
  const auto id = id_high(set.id_scores, set.higher_is_id);
  const auto ood = id_high(set.ood_scores, set.higher_is_id);

  std::vector<std::pair<double, bool>> all;
  all.reserve(id.size() + ood.size());
  for (double v : id) all.emplace_back(v, true);
  for (double v : ood) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Mid-ranks are half-integers, so the rank sum is exact in double.
  double id_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].second) id_rank_sum += mid_rank;
    }
    i = j;
  }
  const double n = static_cast<double>(id.size());
  const double m = static_cast<double>(ood.size());
  const double u = id_rank_sum - n * (n + 1.0) / 2.0;
  return u / (n * m);
}

EvalReport evaluate(const ScoreSet& set, double tpr_target) {
  require_non_empty(set);
  EvalReport r;
  r.lambda = threshold_lambda(set.id_scores, tpr_target, set.higher_is_id);
  r.fpr95 = fpr_at_tpr(set, tpr_target);
  r.auroc = auroc(set);
  r.n_id = set.id_scores.size();
  r.n_ood = set.ood_scores.size();
  return r;
}

}  // namespace catalyst
