// catalyst: calibrate | score | eval | sweep | synth | report

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "catalyst/error.hpp"
#include "catalyst/pipeline.hpp"

namespace {

using namespace catalyst;

struct Options {
  std::string config;
  CliOverrides overrides;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "run configuration (JSON)");
  cmd->add_option("--baseline", o.overrides.baseline,
                  "msp|energy|react|dice|react_dice|ash|scale|knn");
  cmd->add_option("--stat", o.overrides.statistic, "mean|std|max|median|entropy");
  cmd->add_option("--fusion", o.overrides.fusion, "none|mul|add|div|gamma");
  cmd->add_option("--p", o.overrides.p, "percentile in (0,100] or 'sweep'");
  cmd->add_option("--grid", o.overrides.grid, "sweep grid lo:hi:step");
  cmd->add_option("--seed", o.overrides.seed, "seed (synth)");
  cmd->add_option("--out", o.overrides.out, "output directory");
}

RunConfig make_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  apply_overrides(c, o.overrides);
  return c;
}

std::string pct(double v) { return format_number(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catalyst post-hoc OOD scoring"};
  app.require_subcommand(1);
  Options opts;

  auto* calibrate = app.add_subcommand("calibrate", "fit the clipping threshold; writes profile.json");
  auto* score = app.add_subcommand("score", "score id_test and OOD splits; writes scores.csv");
  auto* eval = app.add_subcommand("eval", "score and evaluate; upserts rows in report.csv");
  auto* sweep = app.add_subcommand("sweep", "percentile sweep on the proxy split; writes sweep.csv");
  auto* synth = app.add_subcommand("synth", "write a synthetic benchmark and run.json");
  auto* report = app.add_subcommand("report", "render report.csv as report.md");
  for (auto* cmd : {calibrate, score, eval, sweep, synth, report}) add_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig config = make_config(opts);
    if (calibrate->parsed() || sweep->parsed()) {
      const auto r = sweep->parsed() ? cmd_sweep(config) : cmd_calibrate(config);
      if (r.sweep) {
        std::cout << "p,threshold_c,fpr95,auroc\n";
        for (const auto& row : r.sweep->rows) {
          std::cout << pct(row.p) << ',' << pct(row.threshold_c) << ','
                    << pct(row.report.fpr95) << ',' << pct(row.report.auroc) << '\n';
        }
      }
      std::cout << "statistic=" << to_string(r.profile.kind) << " p=" << pct(r.profile.percentile_p)
                << " c=" << pct(r.profile.threshold_c) << '\n';
    } else if (score->parsed()) {
      for (const auto& s : cmd_score(config)) {
        std::cout << s.split << ": " << s.scores.samples.size() << " samples\n";
      }
    } else if (eval->parsed()) {
      for (const auto& row : cmd_eval(config)) {
        std::cout << row.method << " on " << row.dataset << ": FPR95=" << pct(row.report.fpr95)
                  << " AUROC=" << pct(row.report.auroc) << '\n';
      }
    } else if (synth->parsed()) {
      for (const auto& m : cmd_synth(config)) {
        std::cout << m.name << ": " << m.n_samples << " samples -> " << m.base_dir.string()
                  << '\n';
      }
      std::cout << "run config: " << (config.output_dir / "run.json").string() << '\n';
    } else if (report->parsed()) {
      std::cout << cmd_report(config);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
