// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any
// criterion fails. Every reference value is computed here, independently of
// the library code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "catalyst/baselines.hpp"
#include "catalyst/channel_stats.hpp"
#include "catalyst/fusion.hpp"
#include "catalyst/gamma.hpp"
#include "catalyst/kernels.hpp"
#include "catalyst/metrics.hpp"
#include "catalyst/pipeline.hpp"
#include "catalyst/synth_lab.hpp"

using namespace catalyst;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng_() % (hi - lo + 1));
  }
  double normal() {
    const double u1 = std::max(uniform(0, 1), 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * uniform(0, 1));
  }

 private:
  std::mt19937_64 rng_;
};

// ---- oracles --------------------------------------------------------------

std::vector<double> channel_values(const ActivationMap& m, std::size_t c) {
  const auto ch = m.channel(c);
  return std::vector<double>(ch.begin(), ch.end());
}

double oracle_mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

double oracle_std(const std::vector<double>& v) {
  const long double mu = oracle_mean(v);
  long double s = 0;
  for (double x : v) s += (x - mu) * (x - mu);
  return static_cast<double>(std::sqrt(s / v.size()));
}

double oracle_max(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.back();
}

double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_entropy(const std::vector<double>& v) {
  long double total = 0;
  for (double x : v) total += x;
  if (total == 0) return 0.0;
  long double h = 0;
  for (double x : v) {
    if (x > 0) {
      const long double q = x / total;
      h -= q * std::log(q);
    }
  }
  return static_cast<double>(h);
}

double oracle_percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = (v.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

double oracle_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0;
  for (double a : id) {
    for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Every distinct ID score is a candidate threshold; keep the largest whose
// TPR reaches 95%, then count OOD scores at or above it.
double oracle_fpr95(const std::vector<double>& id, const std::vector<double>& ood) {
  double best = -std::numeric_limits<double>::infinity();
  for (double t : id) {
    std::size_t tp = 0;
    for (double s : id) tp += s >= t;
    if (static_cast<double>(tp) >= 0.95 * id.size() - 1e-9 && t > best) best = t;
  }
  std::size_t fp = 0;
  for (double s : ood) fp += s >= best;
  return static_cast<double>(fp) / ood.size();
}

double oracle_energy(const std::vector<double>& logits) {
  long double m = *std::max_element(logits.begin(), logits.end());
  long double s = 0;
  for (double f : logits) s += std::exp(static_cast<long double>(f) - m);
  return static_cast<double>(m + std::log(s));
}

ActivationMap random_map(Gen& g, std::uint32_t n, std::uint32_t k) {
  std::vector<float> v(static_cast<std::size_t>(n) * k * k);
  for (auto& x : v) {
    const double r = g.uniform(0, 1);
    x = r < 0.15 ? 0.0f : (r < 0.25 ? 2.0f : static_cast<float>(g.uniform(0, 6)));
  }
  return ActivationMap(n, k, std::move(v));
}

// ---- criteria -------------------------------------------------------------

void statistics_oracle() {
  Gen g(101);
  const auto t0 = Clock::now();
  std::size_t checked = 0, bad = 0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::uint32_t>(g.index(1, 16));
    const auto k = static_cast<std::uint32_t>(g.index(1, 7));
    const ActivationMap m = random_map(g, n, k);
    const auto mean = channel_mean(m), sd = channel_std(m), mx = channel_max(m),
               med = channel_median(m), ent = channel_entropy(m);
    for (std::uint32_t c = 0; c < n; ++c) {
      const auto v = channel_values(m, c);
      const double p = g.uniform(0, 100);
      const std::pair<double, double> pairs[] = {
          {mean.values[c], oracle_mean(v)},     {sd.values[c], oracle_std(v)},
          {mx.values[c], oracle_max(v)},        {med.values[c], oracle_median(v)},
          {ent.values[c], oracle_entropy(v)},   {percentile(v, p), oracle_percentile(v, p)}};
      for (const auto& [got, want] : pairs) {
        ++checked;
        // Values below 1e-12 are zero up to rounding of an exact zero.
        if (!rel_close(got, want, 1e-6) && !(std::abs(got) < 1e-12 && std::abs(want) < 1e-12)) {
          ++bad;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  report("statistics oracle (200 maps)", bad == 0 && secs < 5.0,
         std::to_string(checked - bad) + "/" + std::to_string(checked) +
             " values within 1e-6 rel, " + std::to_string(secs) + " s (< 5 s)");
}

void metrics_oracle() {
  Gen g(202);
  const auto t0 = Clock::now();
  int auroc_bad = 0, fpr_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = g.index(1, 200), m = g.index(1, 200);
    std::vector<double> id(n), ood(m);
    const bool coarse = t % 2 == 0;  // half the sets carry many ties
    for (auto& x : id) x = coarse ? std::round(g.uniform(0, 20)) / 4 : g.normal() + 1.0;
    for (auto& x : ood) x = coarse ? std::round(g.uniform(-4, 16)) / 4 : g.normal();
    const ScoreSet s{id, ood, true, ""};
    if (auroc(s) != oracle_auroc(id, ood)) ++auroc_bad;
    if (fpr_at_tpr(s) != oracle_fpr95(id, ood)) ++fpr_bad;
  }
  const double secs = seconds_since(t0);
  report("metrics oracle (100 score sets)", auroc_bad == 0 && fpr_bad == 0 && secs < 10.0,
         "AUROC mismatches " + std::to_string(auroc_bad) + ", FPR95 mismatches " +
             std::to_string(fpr_bad) + ", " + std::to_string(secs) + " s (< 10 s)");
}

void baseline_reductions() {
  Gen g(303);
  const std::uint32_t n = 32, classes = 10;
  ClassifierHead head;
  head.channels = n;
  head.classes = classes;
  for (std::size_t i = 0; i < n * classes; ++i) head.weights.push_back(float(g.normal() * 0.3));
  for (std::size_t j = 0; j < classes; ++j) head.bias.push_back(float(g.normal() * 0.1));

  DiceMask all_true;
  all_true.channels = n;
  all_true.classes = classes;
  all_true.sparsity_p = 0.0;
  all_true.keep.assign(n * classes, 1);

  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    StatVector h{ChannelStatistic::kMean, {}};
    for (std::uint32_t i = 0; i < n; ++i) h.values.push_back(g.uniform(0, 3));
    std::vector<double> logits(classes);
    for (std::size_t j = 0; j < classes; ++j) {
      long double s = head.bias[j];
      for (std::size_t i = 0; i < n; ++i) s += head.weights[i * classes + j] * h.values[i];
      logits[j] = static_cast<double>(s);
    }
    const double want = oracle_energy(logits);
    const double got[] = {
        energy(apply_head(react_clip(h, std::numeric_limits<double>::infinity()), head)),
        dice_score(h, head, all_true),
        energy(apply_head(ash_s(h, 0.0), head)),
        energy(apply_head(scale_shape(h, 0.0), head)),
    };
    for (double x : got) {
      worst = std::max(worst, std::abs(x - want) / std::abs(want));
      if (!rel_close(x, want, 1e-9)) ++bad;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "ReAct/DICE/ASH/SCALE vs Energy: %d mismatches, worst rel %.2e",
                bad, worst);
  report("baseline reductions (100 samples)", bad == 0, buf);
}

void additive_identity() {
  Gen g(404);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t ni = g.index(1, 300), no = g.index(1, 300);
    const double scale = std::pow(10.0, g.uniform(-3, 3));
    std::vector<double> si(ni), so(no), gi(ni), go(no);
    const double mi = g.uniform(-5, 5), mo = g.uniform(-5, 5);
    const double gmi = g.uniform(-2, 4), gmo = g.uniform(-2, 4);
    for (std::size_t i = 0; i < ni; ++i) {
      si[i] = scale * (mi + g.normal());
      gi[i] = gmi + g.uniform(-1, 1);
    }
    for (std::size_t i = 0; i < no; ++i) {
      so[i] = scale * (mo + g.normal());
      go[i] = gmo + g.uniform(-1, 1);
    }
    const auto r = measure_separations(si, so, gi, go);
    const double err = shift_identity_error(r);
    worst = std::max(worst, err);
    if (!(err <= 1e-9)) ++bad;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d/1000 trials off by > 1e-9 rel, worst %.2e", bad, worst);
  report("additive separation identity", bad == 0, buf);
}

void multiplicative_bound() {
  int held = 0, assumptions_met = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScorePairSpec s;
    s.n_in = s.n_out = 1000;
    s.gamma_in_mean = 1.8;
    s.gamma_out_mean = 1.5;
    s.gamma_spread = 0.2;
    s.score_in_mean = 2.5;
    s.score_out_mean = 2.0;
    s.score_spread = 1.0;
    s.seed = 1000 + seed;
    const auto p = generate_score_pairs(s);
    const auto v =
        verify_theorems(measure_separations(p.id_scores, p.ood_scores, p.id_gammas, p.ood_gammas));
    assumptions_met += v.status != TheoremStatus::kAssumptionsViolated;
    held += v.scaled_bound_ok;
  }
  report("multiplicative separation bound", held >= 99,
         std::to_string(held) + "/100 trials within 3 SE (need >= 99); assumptions met in " +
             std::to_string(assumptions_met) + "/100");
}

void directionality() {
  int improved = 0;
  double base_sum = 0, base_lo = 1, base_hi = 0, fused_sum = 0;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const auto bench = generate_benchmark(spec);
    const auto fb =
        FittedBaseline::fit({}, compute_stats(bench.id_train, ChannelStatistic::kMean), bench.head);
    const auto profile =
        calibrate_threshold(compute_stats(bench.id_train, ChannelStatistic::kMax), 90);
    const auto id_base = score_dataset(bench.id_test, fb, std::nullopt, FusionMode::kNone);
    const auto ood_base = score_dataset(bench.ood, fb, std::nullopt, FusionMode::kNone);
    const auto id_fused = score_dataset(bench.id_test, fb, profile, FusionMode::kMultiplicative);
    const auto ood_fused = score_dataset(bench.ood, fb, profile, FusionMode::kMultiplicative);
    const double b = evaluate(ScoreSet{id_base.fused_scores(), ood_base.fused_scores(), true, ""}).fpr95;
    const double f =
        evaluate(ScoreSet{id_fused.fused_scores(), ood_fused.fused_scores(), true, ""}).fpr95;
    improved += f < b;
    base_sum += b;
    fused_sum += f;
    base_lo = std::min(base_lo, b);
    base_hi = std::max(base_hi, b);
  }
  const double base_mean = base_sum / 100;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d/100 seeds improved (need >= 95); Energy FPR95 mean %.3f "
                "(range %.3f-%.3f, target [0.3, 0.7]); fused mean %.3f; %.1f s",
                improved, base_mean, base_lo, base_hi, fused_sum / 100, seconds_since(t0));
  report("end-to-end directionality", improved >= 95 && base_mean >= 0.3 && base_mean <= 0.7,
         buf);
}

void ranking_invariance() {
  Gen g(505);
  int bad = 0, varying = 0;
  for (int t = 0; t < 100; ++t) {
    SynthSpec spec;
    spec.n_channels = static_cast<std::uint32_t>(g.index(4, 32));
    // k >= 3 and a moderate OOD mean keep all-zero channels (max 0, which no
    // positive c can clip) out of the data.
    spec.spatial_k = static_cast<std::uint32_t>(g.index(3, 7));
    spec.n_samples_id = static_cast<std::uint32_t>(g.index(20, 200));
    spec.n_samples_ood = static_cast<std::uint32_t>(g.index(20, 200));
    spec.ood_channel_mean = g.uniform(0.75, 1.0);
    spec.seed = 7000 + t;
    const auto pair = generate(spec);
    const auto fb =
        FittedBaseline::fit({}, compute_stats(pair.id, ChannelStatistic::kMean), pair.head);
    // A threshold below every positive channel max clips each channel to c,
    // so γ = n·c for every sample.
    CalibrationProfile constant;
    constant.kind = ChannelStatistic::kMax;
    constant.percentile_p = 0;
    constant.threshold_c = g.uniform(1e-9, 1e-6);

    const auto base_id = score_dataset(pair.id, fb, std::nullopt, FusionMode::kNone);
    const auto base_ood = score_dataset(pair.ood, fb, std::nullopt, FusionMode::kNone);
    const auto base = evaluate(ScoreSet{base_id.fused_scores(), base_ood.fused_scores(), true, ""});
    for (auto mode : {FusionMode::kMultiplicative, FusionMode::kAdditive}) {
      const auto fi = score_dataset(pair.id, fb, constant, mode);
      const auto fo = score_dataset(pair.ood, fb, constant, mode);
      const double g0 = fi.samples[0].gamma;
      bool constant_gamma = true;
      for (const auto* split : {&fi, &fo}) {
        for (const auto& s : split->samples) constant_gamma &= s.gamma == g0;
      }
      const auto fused = evaluate(ScoreSet{fi.fused_scores(), fo.fused_scores(), true, ""});
      varying += !constant_gamma;
      if (!constant_gamma || fused.fpr95 != base.fpr95 || fused.auroc != base.auroc) ++bad;
    }
  }
  report("ranking invariance (constant gamma)", bad == 0,
         std::to_string(200 - bad) + "/200 fused evaluations bit-identical to baseline (" +
             std::to_string(varying) + " with non-constant gamma)");
}

void performance() {
  Gen g(606);
  const ActivationMap m = random_map(g, 2048, 7);
  std::string detail;
  bool pass = true;
  for (auto kind : {ChannelStatistic::kMean, ChannelStatistic::kStd, ChannelStatistic::kMax,
                    ChannelStatistic::kMedian, ChannelStatistic::kEntropy}) {
    CalibrationProfile p;
    p.kind = kind;
    p.percentile_p = 90;
    p.threshold_c = 2.0;
    std::vector<double> times;
    volatile double sink = 0;
    for (int rep = 0; rep < 201; ++rep) {
      const auto t0 = Clock::now();
      sink = sink + compute_gamma(compute_stat(m, kind), p);
      times.push_back(seconds_since(t0) * 1e3);
    }
    std::nth_element(times.begin(), times.begin() + 100, times.end());
    const double ms = times[100];
    pass &= ms < 1.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%s %.3f ms", detail.empty() ? "" : ", ",
                  std::string(to_string(kind)).c_str(), ms);
    detail += buf;
  }
  report("gamma on 2048x7x7 (< 1 ms)", pass,
         detail + " [" + std::string(kernels::isa_name(kernels::active().isa)) + ", median of 201]");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("catalyst_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::string csv[2];
  const char* threads[2] = {"1", "4"};
  try {
    for (int run = 0; run < 2; ++run) {
      setenv("CATALYST_THREADS", threads[run], 1);
      RunConfig c;
      c.output_dir = root / ("run" + std::to_string(run));
      c.seed = 42;
      cmd_synth(c);
      RunConfig r = load_run_config(c.output_dir / "run.json");
      for (auto [baseline, stat, fusion] :
           {std::tuple{BaselineMethod::kEnergy, ChannelStatistic::kMax, FusionMode::kNone},
            std::tuple{BaselineMethod::kEnergy, ChannelStatistic::kMax, FusionMode::kMultiplicative},
            std::tuple{BaselineMethod::kEnergy, ChannelStatistic::kMean, FusionMode::kAdditive},
            std::tuple{BaselineMethod::kMsp, ChannelStatistic::kStd, FusionMode::kMultiplicative},
            std::tuple{BaselineMethod::kReact, ChannelStatistic::kMean, FusionMode::kMultiplicative},
            std::tuple{BaselineMethod::kKnn, ChannelStatistic::kMax, FusionMode::kKnnDivide},
            std::tuple{BaselineMethod::kEnergy, ChannelStatistic::kEntropy,
                       FusionMode::kStandaloneGamma}}) {
        r.baseline = baseline;
        r.statistic = stat;
        r.fusion = fusion;
        cmd_eval(r);
      }
      cmd_report(r);
      csv[run] = slurp(c.output_dir / "report.csv");
    }
  } catch (const std::exception& e) {
    unsetenv("CATALYST_THREADS");
    fs::remove_all(root);
    report("determinism (report.csv)", false, std::string("error: ") + e.what());
    return;
  }
  unsetenv("CATALYST_THREADS");
  fs::remove_all(root);
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  report("determinism (report.csv)", same,
         std::string(same ? "byte-identical" : "differs") + " across two runs (" +
             std::to_string(csv[0].size()) + " bytes, 1 vs 4 threads)");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void()>> criteria[] = {
      {"statistics oracle", statistics_oracle},
      {"metrics oracle", metrics_oracle},
      {"baseline reductions", baseline_reductions},
      {"additive identity", additive_identity},
      {"multiplicative bound", multiplicative_bound},
      {"directionality", directionality},
      {"ranking invariance", ranking_invariance},
      {"performance", performance},
      {"determinism", determinism},
  };
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(name, false, std::string("error: ") + e.what());
    }
  }
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
