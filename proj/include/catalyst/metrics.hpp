#pragma once

// FPR at a target TPR and AUROC for paired ID/OOD score sets.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace catalyst {

struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
  // false for distance-style scores where small means in-distribution.
  bool higher_is_id = true;
  std::string method_label;
};

struct EvalReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double lambda = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

// Largest λ such that at least `tpr_target` of the ID scores fall on the ID
// side (>= λ, or <= λ when !higher_is_id). λ is always one of the ID scores.
double threshold_lambda(std::span<const double> id_scores, double tpr_target = 0.95,
                        bool higher_is_id = true);

// Fraction of OOD scores on the ID side of threshold_lambda, boundary
// inclusive.
double fpr_at_tpr(const ScoreSet& set, double tpr_target = 0.95);

// Mann-Whitney U / (n·m) via mid-ranks; ties count one half.
double auroc(const ScoreSet& set);

EvalReport evaluate(const ScoreSet& set, double tpr_target = 0.95);

}  // namespace catalyst
