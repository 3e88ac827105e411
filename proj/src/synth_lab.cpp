#include "catalyst/synth_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "catalyst/baselines.hpp"
#include "catalyst/channel_stats.hpp"
#include "catalyst/error.hpp"
#include "catalyst/parallel.hpp"
#include "json.hpp"

namespace catalyst {
namespace {

enum Stream : std::uint64_t {
  kHeadStream = 0,
  kIdTrainStream = 1,
  kIdValStream = 2,
  kIdTestStream = 3,
  kOodStream = 4,
  kProxyStream = 5,
  kPairInStream = 6,
  kPairOutStream = 7,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

// Box-Muller by hand: std::normal_distribution is not specified bit-for-bit
// across standard libraries.
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

double mean_of(std::span<const double> xs) {
  Neumaier acc;
  for (double x : xs) acc.add(x);
  return acc.value() / static_cast<double>(xs.size());
}

ClassifierHead make_head(const SynthSpec& spec) {
  ClassifierHead head;
  head.channels = spec.n_channels;
  head.classes = spec.n_classes;
  head.weights.resize(static_cast<std::size_t>(spec.n_channels) * spec.n_classes);
  head.bias.assign(spec.n_classes, 0.0f);
  Normal normal(sub_seed(spec.seed, kHeadStream, 0));
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n_channels));
  for (auto& w : head.weights) {
    w = static_cast<float>((spec.head_weight_mean + spec.head_weight_spread * normal()) * scale);
  }
  return head;
}

ActivationMap draw_map(const SynthSpec& spec, double mean, double spread, std::uint64_t seed) {
  Normal normal(seed);
  const double intensity = std::exp(spec.intensity_jitter * normal());
  std::vector<float> values(static_cast<std::size_t>(spec.n_channels) * spec.spatial_k *
                            spec.spatial_k);
  for (auto& v : values) {
    v = static_cast<float>(intensity * std::max(0.0, mean + spread * normal()));
  }
  return ActivationMap(spec.n_channels, spec.spatial_k, std::move(values));
}

Dataset make_split(const SynthSpec& spec, const ClassifierHead& head, std::string name,
                   SplitRole role, std::uint32_t n, double mean, double spread,
                   std::uint64_t stream) {
  Dataset d;
  d.maps.resize(n);
  d.logits.resize(n);
  parallel_for(n, [&](std::size_t i) {
    d.maps[i] = draw_map(spec, mean, spread, sub_seed(spec.seed, stream, i));
    const auto logits = apply_head(channel_mean(d.maps[i]), head);
    d.logits[i].values.assign(logits.begin(), logits.end());
  });
  d.head = head;
  d.manifest.name = std::move(name);
  d.manifest.role = role;
  d.manifest.n_samples = n;
  d.manifest.n_channels = spec.n_channels;
  d.manifest.spatial_k = spec.spatial_k;
  d.manifest.n_classes = spec.n_classes;
  return d;
}

}  // namespace

void SynthSpec::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (n_channels == 0 || spatial_k == 0) bad("synth: n_channels and spatial_k must be positive");
  if (n_samples_id == 0 || n_samples_ood == 0) bad("synth: sample counts must be positive");
  if (n_classes < 2) bad("synth: n_classes must be at least 2");
  if (!(proxy_shift >= 0.0 && proxy_shift <= 1.0)) bad("synth: proxy_shift must be in [0, 1]");
  for (double s : {id_spread, ood_spread, intensity_jitter, head_weight_spread}) {
    if (!(s >= 0.0) || !std::isfinite(s)) bad("synth: spreads must be finite and non-negative");
  }
  for (double m : {id_channel_mean, ood_channel_mean, head_weight_mean}) {
    if (!std::isfinite(m)) bad("synth: means must be finite");
  }
}

std::string synth_spec_to_json(const SynthSpec& s) {
  nlohmann::ordered_json j;
  j["n_channels"] = s.n_channels;
  j["spatial_k"] = s.spatial_k;
  j["n_samples_id"] = s.n_samples_id;
  j["n_samples_ood"] = s.n_samples_ood;
  j["id_channel_mean"] = s.id_channel_mean;
  j["ood_channel_mean"] = s.ood_channel_mean;
  j["id_spread"] = s.id_spread;
  j["ood_spread"] = s.ood_spread;
  j["seed"] = s.seed;
  j["n_classes"] = s.n_classes;
  j["intensity_jitter"] = s.intensity_jitter;
  j["head_weight_mean"] = s.head_weight_mean;
  j["head_weight_spread"] = s.head_weight_spread;
  j["proxy_shift"] = s.proxy_shift;
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(std::string_view text) {
  SynthSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidValue, "synth spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "n_channels") s.n_channels = value.get<std::uint32_t>();
      else if (key == "spatial_k") s.spatial_k = value.get<std::uint32_t>();
      else if (key == "n_samples_id") s.n_samples_id = value.get<std::uint32_t>();
      else if (key == "n_samples_ood") s.n_samples_ood = value.get<std::uint32_t>();
      else if (key == "id_channel_mean") s.id_channel_mean = value.get<double>();
      else if (key == "ood_channel_mean") s.ood_channel_mean = value.get<double>();
      else if (key == "id_spread") s.id_spread = value.get<double>();
      else if (key == "ood_spread") s.ood_spread = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "n_classes") s.n_classes = value.get<std::uint32_t>();
      else if (key == "intensity_jitter") s.intensity_jitter = value.get<double>();
      else if (key == "head_weight_mean") s.head_weight_mean = value.get<double>();
      else if (key == "head_weight_spread") s.head_weight_spread = value.get<double>();
      else if (key == "proxy_shift") s.proxy_shift = value.get<double>();
      else throw Error(ErrorCode::kInvalidValue, "unknown synth spec key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, std::string("bad synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return synth_spec_from_json(ss.str());
}

SynthPair generate(const SynthSpec& spec) {
  spec.validate();
  SynthPair out{make_head(spec), {}, {}};
  out.id = make_split(spec, out.head, "id", SplitRole::kIdTest, spec.n_samples_id,
                      spec.id_channel_mean, spec.id_spread, kIdTestStream);
  out.ood = make_split(spec, out.head, "ood", SplitRole::kOod, spec.n_samples_ood,
                       spec.ood_channel_mean, spec.ood_spread, kOodStream);
  return out;
}

SynthBenchmark generate_benchmark(const SynthSpec& spec) {
  spec.validate();
  SynthBenchmark b;
  b.head = make_head(spec);
  const double mi = spec.id_channel_mean, si = spec.id_spread;
  b.id_train = make_split(spec, b.head, "id_train", SplitRole::kIdTrain, spec.n_samples_id, mi,
                          si, kIdTrainStream);
  b.id_val = make_split(spec, b.head, "id_val", SplitRole::kIdVal, spec.n_samples_id, mi, si,
                        kIdValStream);
  b.id_test = make_split(spec, b.head, "id_test", SplitRole::kIdTest, spec.n_samples_id, mi, si,
                         kIdTestStream);
  b.ood = make_split(spec, b.head, "ood", SplitRole::kOod, spec.n_samples_ood,
                     spec.ood_channel_mean, spec.ood_spread, kOodStream);
  const double t = spec.proxy_shift;
  b.proxy = make_split(spec, b.head, "proxy", SplitRole::kOod, spec.n_samples_id,
                       mi + t * (spec.ood_channel_mean - mi), si + t * (spec.ood_spread - si),
                       kProxyStream);
  return b;
}

std::vector<DatasetManifest> write_benchmark(const SynthBenchmark& bench,
                                             const std::filesystem::path& dir) {
  std::vector<DatasetManifest> out;
  for (const Dataset* d : {&bench.id_train, &bench.id_val, &bench.id_test, &bench.ood,
                           &bench.proxy}) {
    out.push_back(save_dump(d->maps, d->logits, bench.head, dir / d->manifest.name,
                            d->manifest.name, d->manifest.role));
  }
  return out;
}

ScorePairs generate_score_pairs(const ScorePairSpec& spec) {
  if (spec.n_in == 0 || spec.n_out == 0) {
    throw Error(ErrorCode::kInvalidArgument, "score pairs need n_in, n_out > 0");
  }
  ScorePairs out;
  auto fill = [&](std::size_t n, double gm, double sm, std::uint64_t stream,
                  std::vector<double>& gammas, std::vector<double>& scores) {
    Normal normal(sub_seed(spec.seed, stream, 0));
    gammas.resize(n);
    scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      gammas[i] = gm + spec.gamma_spread * normal();
      scores[i] = sm + spec.score_spread * normal();
    }
  };
  fill(spec.n_in, spec.gamma_in_mean, spec.score_in_mean, kPairInStream, out.id_gammas,
       out.id_scores);
  fill(spec.n_out, spec.gamma_out_mean, spec.score_out_mean, kPairOutStream, out.ood_gammas,
       out.ood_scores);
  return out;
}

SeparationReport measure_separations(std::span<const double> id_scores,
                                     std::span<const double> ood_scores,
                                     std::span<const double> id_gammas,
                                     std::span<const double> ood_gammas) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "separation needs non-empty ID and OOD scores");
  }
  if (id_scores.size() != id_gammas.size() || ood_scores.size() != ood_gammas.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and gammas differ in length");
  }

  struct Moments {
    double s = 0, g = 0, gs = 0, shift = 0, cov = 0, var_gs = 0;
  };
  auto moments = [](std::span<const double> s, std::span<const double> g) {
    const std::size_t n = s.size();
    std::vector<double> gs(n), shift(n);
    for (std::size_t i = 0; i < n; ++i) {
      gs[i] = g[i] * s[i];
      shift[i] = g[i] + s[i];
    }
    Moments m;
    m.s = mean_of(s);
    m.g = mean_of(g);
    m.gs = mean_of(gs);
    m.shift = mean_of(shift);
    if (n > 1) {
      Neumaier cov, var;
      for (std::size_t i = 0; i < n; ++i) {
        cov.add((g[i] - m.g) * (s[i] - m.s));
        var.add((gs[i] - m.gs) * (gs[i] - m.gs));
      }
      m.cov = cov.value() / static_cast<double>(n - 1);
      m.var_gs = var.value() / static_cast<double>(n - 1);
    }
    return m;
  };
  const Moments in = moments(id_scores, id_gammas);
  const Moments out = moments(ood_scores, ood_gammas);

  SeparationReport r;
  r.n_in = id_scores.size();
  r.n_out = ood_scores.size();
  r.delta_original = in.s - out.s;
  r.delta_scaled = in.gs - out.gs;
  r.delta_shift = in.shift - out.shift;
  r.gamma_bar_in = in.g;
  r.gamma_bar_out = out.g;
  r.covariance_in = in.cov;
  r.covariance_out = out.cov;
  r.score_bar_in = in.s;
  r.scaled_slack = 3.0 * std::sqrt(in.var_gs / static_cast<double>(r.n_in) +
                                   out.var_gs / static_cast<double>(r.n_out));
  return r;
}

std::string_view to_string(TheoremStatus status) noexcept {
  switch (status) {
    case TheoremStatus::kHolds:
      return "holds";
    case TheoremStatus::kAssumptionsViolated:
      return "assumptions_violated";
    case TheoremStatus::kFails:
      return "fails";
  }
  return "unknown";
}

double shift_identity_error(const SeparationReport& r) {
  const double lhs = r.delta_shift - r.delta_original;
  const double rhs = r.gamma_bar_in - r.gamma_bar_out;
  const double scale = std::max({std::abs(r.delta_shift), std::abs(r.delta_original),
                                 std::abs(r.gamma_bar_in), std::abs(r.gamma_bar_out)});
  if (scale == 0.0) return std::abs(lhs - rhs);
  return std::abs(lhs - rhs) / scale;
}

TheoremVerdict verify_theorems(const SeparationReport& r, double tolerance) {
  TheoremVerdict v;
  v.scaled_bound_ok = r.delta_scaled >= r.gamma_bar_out * r.delta_original - r.scaled_slack;
  const double scale = std::max({std::abs(r.delta_shift), std::abs(r.delta_original),
                                 std::abs(r.gamma_bar_in), std::abs(r.gamma_bar_out), 1e-300});
  v.shift_bound_ok = r.delta_shift >= r.delta_original - 1e-9 * scale;

  auto violated = [&](std::string clause) {
    v.status = TheoremStatus::kAssumptionsViolated;
    v.clause = std::move(clause);
    return v;
  };
  if (r.delta_original < 0.0) return violated("delta_original >= 0");
  if (r.gamma_bar_in < r.gamma_bar_out) return violated("gamma_bar_in >= gamma_bar_out");
  if (r.gamma_bar_out < 1.0) return violated("gamma_bar_out >= 1");
  const double cov_limit = tolerance * std::abs(r.delta_original);
  if (std::abs(r.covariance_in) > cov_limit || std::abs(r.covariance_out) > cov_limit) {
    return violated("|cov(gamma, S)| <= tolerance * |delta_original|");
  }
  if (r.score_bar_in < 0.0) return violated("mean ID score >= 0");

  if (!v.shift_bound_ok) {
    v.status = TheoremStatus::kFails;
    v.clause = "additive: delta_shift >= delta_original";
  } else if (!v.scaled_bound_ok) {
    v.status = TheoremStatus::kFails;
    v.clause = "multiplicative: delta_scaled >= gamma_bar_out * delta_original";
  }
  return v;
}

}  // namespace catalyst
