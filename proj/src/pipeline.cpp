#include "catalyst/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "catalyst/error.hpp"
#include "catalyst/parallel.hpp"
#include "json.hpp"

namespace catalyst {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

double parse_number(const std::string& text, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad ") + what + ": '" + text + "'");
  }
  return v;
}

void set_percentile(RunConfig& c, const std::string& text) {
  if (text == "sweep") {
    c.sweep = true;
    c.percentile_p.reset();
    return;
  }
  const double p = parse_number(text, "percentile");
  if (!(p > 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must be in (0, 100]: " + text);
  }
  c.sweep = false;
  c.percentile_p = p;
}

BaselineOverrides parse_baseline_params(const Json& j) {
  BaselineOverrides o;
  for (const auto& [key, value] : j.items()) {
    if (key == "react_percentile") o.react_percentile = value.get<double>();
    else if (key == "dice_sparsity") o.dice_sparsity = value.get<double>();
    else if (key == "ash_percentile") o.ash_percentile = value.get<double>();
    else if (key == "scale_percentile") o.scale_percentile = value.get<double>();
    else if (key == "knn_k") o.knn_k = value.get<std::size_t>();
    else throw Error(ErrorCode::kInvalidValue, "unknown baseline_params key: " + key);
  }
  return o;
}

Dataset load_split(const RunConfig& c, const std::optional<fs::path>& path, const char* role) {
  if (!path) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config names no ") + role + " split");
  }
  return load_dump(read_manifest(*path), LoadOptions{c.allow_negative});
}

std::vector<StatVector> mean_features(const Dataset& d) {
  return compute_stats(d, ChannelStatistic::kMean);
}

FittedBaseline fit_baseline(const RunConfig& c, const Dataset& id_train) {
  const auto features = mean_features(id_train);
  return FittedBaseline::fit(resolved_baseline_config(c), features, id_train.head);
}

void check_config(const RunConfig& c) {
  check_compatible(c.baseline, c.fusion);
}

std::string source_label(const RunConfig& c) {
  return c.id_train ? c.id_train->generic_string() : std::string();
}

// Sweep over the grid: for each p, γ is computed on the held-out ID split and
// the proxy split and fused with the baseline; the lowest FPR95 wins.
SweepResult run_sweep(const RunConfig& c, const std::vector<StatVector>& id_stats,
                      const FittedBaseline& baseline) {
  if (c.fusion == FusionMode::kNone) {
    throw Error(ErrorCode::kInvalidArgument,
                "a percentile sweep needs a fusion mode other than none");
  }
  const Dataset id_val = load_split(c, c.id_val, "id_val");
  const Dataset proxy = load_split(c, c.proxy, "proxy");

  struct Prepared {
    std::vector<StatVector> stats;
    std::vector<double> base;
  };
  auto prepare = [&](const Dataset& d) {
    Prepared p;
    p.stats = compute_stats(d, c.statistic);
    const auto feats = mean_features(d);
    p.base.resize(d.maps.size());
    parallel_for(d.maps.size(),
                 [&](std::size_t i) { p.base[i] = baseline.score(feats[i], d.logits[i].values); });
    return p;
  };
  const Prepared in = prepare(id_val);
  const Prepared out = prepare(proxy);
  const bool hi = fused_higher_is_id(c.baseline, c.fusion);

  const SweepScorer scorer = [&](const CalibrationProfile& profile) {
    auto fused = [&](const Prepared& p) {
      std::vector<double> s(p.base.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = fuse(compute_gamma(p.stats[i], profile), p.base[i], c.fusion);
      }
      return s;
    };
    return evaluate(ScoreSet{fused(in), fused(out), hi, {}});
  };
  const auto grid = parse_grid(c.grid);
  return sweep_percentiles(id_stats, grid, scorer, source_label(c));
}

CalibrateResult calibrate(const RunConfig& c, const Dataset& id_train,
                          const FittedBaseline* baseline) {
  const auto id_stats = compute_stats(id_train, c.statistic);
  CalibrateResult r;
  if (c.sweep) {
    if (!baseline) throw Error(ErrorCode::kInvalidArgument, "sweep needs a fitted baseline");
    r.sweep = run_sweep(c, id_stats, *baseline);
    r.profile = calibrate_threshold(id_stats, r.sweep->best_p(), source_label(c));
  } else {
    r.profile = calibrate_threshold(id_stats, resolved_percentile(c), source_label(c));
  }
  return r;
}

void write_sweep_csv(const fs::path& file, const SweepResult& sweep) {
  std::ostringstream os;
  os << "p,threshold_c,fpr95,auroc,selected\n";
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& row = sweep.rows[i];
    os << format_number(row.p) << ',' << format_number(row.threshold_c) << ','
       << format_number(row.report.fpr95) << ',' << format_number(row.report.auroc) << ','
       << (i == sweep.best_index ? 1 : 0) << '\n';
  }
  std::ofstream out(file, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << os.str();
}

std::optional<CalibrationProfile> profile_for_scoring(const RunConfig& c, const Dataset& id_train,
                                                      const FittedBaseline& baseline) {
  if (c.fusion == FusionMode::kNone) return std::nullopt;
  if (c.profile) {
    auto p = load_profile(*c.profile);
    if (p.kind != c.statistic) {
      throw Error(ErrorCode::kIncompatible,
                  "profile " + c.profile->string() + " is for statistic " +
                      std::string(to_string(p.kind)) + ", config asks for " +
                      std::string(to_string(c.statistic)));
    }
    return p;
  }
  return calibrate(c, id_train, &baseline).profile;
}

struct Scored {
  std::string method_label;
  ScoredSplit id_test;
  std::vector<std::pair<std::string, ScoredSplit>> ood;
};

Scored score_all(const RunConfig& c) {
  check_config(c);
  if (c.ood.empty()) throw Error(ErrorCode::kInvalidArgument, "config names no ood split");
  const Dataset id_train = load_split(c, c.id_train, "id_train");
  const FittedBaseline baseline = fit_baseline(c, id_train);
  const auto profile = profile_for_scoring(c, id_train, baseline);

  Scored s;
  s.id_test = score_dataset(load_split(c, c.id_test, "id_test"), baseline, profile, c.fusion);
  s.method_label = s.id_test.method_label;
  for (const auto& [name, path] : c.ood) {
    s.ood.emplace_back(name, score_dataset(load_split(c, path, "ood"), baseline, profile,
                                           c.fusion));
  }
  return s;
}

}  // namespace

RunConfig run_config_from_json(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  c.output_dir = base_dir.empty() ? fs::path("run") : base_dir / "run";
  try {
    const Json j = Json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidValue, "run config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") {
        c.preset = parse_preset(value.get<std::string>());
      } else if (key == "backbone") {
        c.backbone = value.get<std::string>();
      } else if (key == "splits") {
        for (const auto& [split, v] : value.items()) {
          if (split == "id_train") c.id_train = resolve(base_dir, v.get<std::string>());
          else if (split == "id_val") c.id_val = resolve(base_dir, v.get<std::string>());
          else if (split == "id_test") c.id_test = resolve(base_dir, v.get<std::string>());
          else if (split == "proxy") c.proxy = resolve(base_dir, v.get<std::string>());
          else if (split == "ood") {
            if (v.is_string()) {
              const fs::path p = resolve(base_dir, v.get<std::string>());
              c.ood.emplace_back(read_manifest(p).name, p);
            } else {
              for (const auto& [name, path] : v.items()) {
                c.ood.emplace_back(name, resolve(base_dir, path.get<std::string>()));
              }
            }
          } else {
            throw Error(ErrorCode::kInvalidValue, "unknown split: " + split);
          }
        }
      } else if (key == "baseline") {
        c.baseline = parse_baseline(value.get<std::string>());
      } else if (key == "statistic") {
        c.statistic = parse_statistic(value.get<std::string>());
      } else if (key == "fusion") {
        c.fusion = parse_fusion(value.get<std::string>());
      } else if (key == "p") {
        set_percentile(c, value.is_string() ? value.get<std::string>()
                                            : format_number(value.get<double>()));
      } else if (key == "grid") {
        c.grid = value.get<std::string>();
      } else if (key == "baseline_params") {
        c.baseline_params = parse_baseline_params(value);
      } else if (key == "profile") {
        c.profile = resolve(base_dir, value.get<std::string>());
      } else if (key == "output_dir") {
        c.output_dir = resolve(base_dir, value.get<std::string>());
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "synth") {
        c.synth = value.is_string() ? load_synth_spec(resolve(base_dir, value.get<std::string>()))
                                    : synth_spec_from_json(value.dump());
      } else if (key == "allow_negative") {
        c.allow_negative = value.get<bool>();
      } else {
        throw Error(ErrorCode::kInvalidValue, "unknown run config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, std::string("bad run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str(), file.parent_path());
}

void apply_overrides(RunConfig& c, const CliOverrides& o) {
  if (o.baseline) c.baseline = parse_baseline(*o.baseline);
  if (o.statistic) c.statistic = parse_statistic(*o.statistic);
  if (o.fusion) c.fusion = parse_fusion(*o.fusion);
  if (o.p) set_percentile(c, *o.p);
  if (o.grid) c.grid = *o.grid;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
}

double resolved_percentile(const RunConfig& c) {
  if (c.percentile_p) return *c.percentile_p;
  return default_gamma_percentile(c.preset, c.statistic, c.baseline, c.backbone);
}

BaselineConfig resolved_baseline_config(const RunConfig& c) {
  BaselineConfig b =
      default_baseline_config(c.preset, c.baseline, c.fusion != FusionMode::kNone, c.backbone);
  const auto& o = c.baseline_params;
  if (o.react_percentile) b.react_percentile = *o.react_percentile;
  if (o.dice_sparsity) b.dice_sparsity = *o.dice_sparsity;
  if (o.ash_percentile) b.ash_percentile = *o.ash_percentile;
  if (o.scale_percentile) b.scale_percentile = *o.scale_percentile;
  if (o.knn_k) b.knn_k = *o.knn_k;
  return b;
}

CalibrateResult cmd_calibrate(const RunConfig& c) {
  check_config(c);
  const Dataset id_train = load_split(c, c.id_train, "id_train");
  std::optional<FittedBaseline> baseline;
  if (c.sweep) baseline = fit_baseline(c, id_train);
  CalibrateResult r = calibrate(c, id_train, baseline ? &*baseline : nullptr);
  fs::create_directories(c.output_dir);
  save_profile(r.profile, c.output_dir / "profile.json");
  if (r.sweep) write_sweep_csv(c.output_dir / "sweep.csv", *r.sweep);
  return r;
}

CalibrateResult cmd_sweep(const RunConfig& config) {
  RunConfig c = config;
  c.sweep = true;
  return cmd_calibrate(c);
}

std::vector<NamedScores> cmd_score(const RunConfig& c) {
  Scored s = score_all(c);
  std::vector<NamedScores> out;
  out.push_back({"id_test", std::move(s.id_test)});
  for (auto& [name, split] : s.ood) out.push_back({name, std::move(split)});

  std::vector<std::pair<std::string, const ScoredSplit*>> rows;
  for (const auto& n : out) rows.emplace_back(n.split, &n.scores);
  fs::create_directories(c.output_dir);
  write_scores_csv(c.output_dir / "scores.csv", rows);
  return out;
}

std::vector<ReportRow> cmd_eval(const RunConfig& c) {
  const Scored s = score_all(c);
  const auto id_scores = s.id_test.fused_scores();
  std::vector<ReportRow> rows;
  fs::create_directories(c.output_dir);
  for (const auto& [name, split] : s.ood) {
    ReportRow row;
    row.method = s.method_label;
    row.baseline = std::string(to_string(c.baseline));
    row.statistic = c.fusion == FusionMode::kNone ? "" : std::string(to_string(c.statistic));
    row.fusion = std::string(to_string(c.fusion));
    row.dataset = name;
    row.report = evaluate(ScoreSet{id_scores, split.fused_scores(), s.id_test.higher_is_id,
                                   s.method_label});
    upsert_report_row(c.output_dir / "report.csv", row);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<DatasetManifest> cmd_synth(const RunConfig& c) {
  SynthSpec spec = c.synth.value_or(SynthSpec{});
  if (c.seed) spec.seed = *c.seed;
  const auto manifests = write_benchmark(generate_benchmark(spec), c.output_dir / "data");

  auto write_text = [](const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
    out << text;
  };
  write_text(c.output_dir / "synth.json", synth_spec_to_json(spec));

  nlohmann::ordered_json run;
  run["preset"] = to_string(c.preset);
  run["backbone"] = "synthetic";
  run["splits"]["id_train"] = "data/id_train";
  run["splits"]["id_val"] = "data/id_val";
  run["splits"]["id_test"] = "data/id_test";
  run["splits"]["proxy"] = "data/proxy";
  run["splits"]["ood"]["synthetic"] = "data/ood";
  run["baseline"] = "energy";
  run["statistic"] = "max";
  run["fusion"] = "mul";
  run["p"] = 90;
  run["grid"] = c.grid;
  run["output_dir"] = ".";
  run["seed"] = spec.seed;
  write_text(c.output_dir / "run.json", run.dump(2) + "\n");
  return manifests;
}

std::string cmd_report(const RunConfig& c) {
  const fs::path csv = c.output_dir / "report.csv";
  if (!fs::exists(csv)) {
    throw Error(ErrorCode::kEmptyInput, "no report.csv in " + c.output_dir.string());
  }
  const std::string md = render_markdown(read_report_csv(csv));
  std::ofstream out(c.output_dir / "report.md", std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write report.md");
  out << md;
  return md;
}

}  // namespace catalyst
