#include "catalyst/synth_lab.hpp"

#include <cmath>
#include <cstdlib>

#include "catalyst/baselines.hpp"
#include "catalyst/channel_stats.hpp"
#include "catalyst/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace catalyst;

namespace {

SynthSpec small(std::uint64_t seed) {
  SynthSpec s;
  s.n_channels = 8;
  s.spatial_k = 3;
  s.n_samples_id = 20;
  s.n_samples_ood = 15;
  s.seed = seed;
  return s;
}

// Long-double two-pass means as an independent reference.
long double ld_mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

}  // namespace

TEST_CASE("generation is deterministic and seed-sensitive") {
  const auto a = generate(small(1)), b = generate(small(1)), c = generate(small(2));
  CHECK(a.id.maps == b.id.maps);
  CHECK(a.ood.logits == b.ood.logits);
  CHECK(a.head == b.head);
  CHECK_FALSE(a.id.maps == c.id.maps);
  CHECK(a.id.maps.size() == 20);
  CHECK(a.ood.maps.size() == 15);
}

TEST_CASE("generation does not depend on the thread count") {
  setenv("CATALYST_THREADS", "1", 1);
  const auto a = generate_benchmark(small(3));
  setenv("CATALYST_THREADS", "5", 1);
  const auto b = generate_benchmark(small(3));
  unsetenv("CATALYST_THREADS");
  CHECK(a.id_train.maps == b.id_train.maps);
  CHECK(a.proxy.maps == b.proxy.maps);
}

TEST_CASE("maps are non-negative and logits come from the head") {
  const auto p = generate(small(4));
  for (const auto& m : p.id.maps) {
    for (float v : m.values()) CHECK(v >= 0.0f);
  }
  const auto logits = apply_head(channel_mean(p.id.maps[0]), p.head);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    CHECK(p.id.logits[0].values[j] == static_cast<float>(logits[j]));
  }
}

TEST_CASE("identical ID and OOD parameters give overlapping statistics") {
  SynthSpec s = small(5);
  s.ood_channel_mean = s.id_channel_mean;
  s.ood_spread = s.id_spread;
  s.n_samples_id = s.n_samples_ood = 300;
  const auto p = generate(s);
  double mi = 0, mo = 0;
  for (const auto& m : p.id.maps) for (double v : channel_mean(m).values) mi += v;
  for (const auto& m : p.ood.maps) for (double v : channel_mean(m).values) mo += v;
  CHECK(mi / 300 == doctest::Approx(mo / 300).epsilon(0.05));
}

TEST_CASE("spec validation and JSON round-trip") {
  SynthSpec s = small(9);
  s.proxy_shift = 0.25;
  const auto t = synth_spec_from_json(synth_spec_to_json(s));
  CHECK(t.n_channels == s.n_channels);
  CHECK(t.seed == s.seed);
  CHECK(t.proxy_shift == s.proxy_shift);
  CHECK_THROWS_AS(synth_spec_from_json("{\"n_channels\": 0}"), Error);
  CHECK_THROWS_AS(synth_spec_from_json("{\"bogus\": 1}"), Error);
  CHECK_THROWS_AS(synth_spec_from_json("{\"id_spread\": -1}"), Error);
}

TEST_CASE("benchmark writes loadable dumps") {
  testing::TempDir dir;
  const auto ms = write_benchmark(generate_benchmark(small(6)), dir.path());
  REQUIRE(ms.size() == 5);
  for (const auto& m : ms) CHECK(validate_dump(m).empty());
  CHECK(ms[3].role == SplitRole::kOod);
}

TEST_CASE("separation measures against a long-double oracle") {
  testing::Gen g(31);
  for (int t = 0; t < 50; ++t) {
    const auto si = g.doubles(g.index(2, 200), -2, 5), so = g.doubles(g.index(2, 200), -2, 5);
    const auto gi = g.doubles(si.size(), 0, 3), go = g.doubles(so.size(), 0, 3);
    const auto r = measure_separations(si, so, gi, go);
    std::vector<double> pi, po;
    for (std::size_t i = 0; i < si.size(); ++i) pi.push_back(gi[i] * si[i]);
    for (std::size_t i = 0; i < so.size(); ++i) po.push_back(go[i] * so[i]);
    CHECK(r.delta_original == doctest::Approx(double(ld_mean(si) - ld_mean(so))).epsilon(1e-12));
    CHECK(r.delta_scaled == doctest::Approx(double(ld_mean(pi) - ld_mean(po))).epsilon(1e-12));
    CHECK(r.gamma_bar_in == doctest::Approx(double(ld_mean(gi))).epsilon(1e-12));
    CHECK(shift_identity_error(r) < 1e-12);
  }
  CHECK_THROWS_AS(measure_separations({}, std::vector<double>{1}, {}, std::vector<double>{1}),
                  Error);
  CHECK_THROWS_AS(measure_separations(std::vector<double>{1}, std::vector<double>{1},
                                      std::vector<double>{1, 2}, std::vector<double>{1}),
                  Error);
}

TEST_CASE("verdicts name the violated clause") {
  SeparationReport r;
  r.delta_original = 1.0;
  r.delta_scaled = 2.0;
  r.delta_shift = 1.5;
  r.gamma_bar_in = 2.0;
  r.gamma_bar_out = 1.5;
  r.score_bar_in = 3.0;
  CHECK(verify_theorems(r).status == TheoremStatus::kHolds);

  auto neg = r;
  neg.delta_original = -1.0;
  auto v = verify_theorems(neg);
  CHECK(v.status == TheoremStatus::kAssumptionsViolated);
  CHECK(v.clause.find("delta_original") != std::string::npos);

  auto order = r;
  order.gamma_bar_in = 1.2;
  CHECK(verify_theorems(order).clause == "gamma_bar_in >= gamma_bar_out");

  auto small_out = r;
  small_out.gamma_bar_in = 0.9;
  small_out.gamma_bar_out = 0.8;
  CHECK(verify_theorems(small_out).clause == "gamma_bar_out >= 1");

  auto cov = r;
  cov.covariance_in = 0.2;
  CHECK(verify_theorems(cov).status == TheoremStatus::kAssumptionsViolated);

  auto fails = r;
  fails.delta_scaled = 1.0;  // below 1.5 * 1.0 with zero slack
  v = verify_theorems(fails);
  CHECK(v.status == TheoremStatus::kFails);
  CHECK_FALSE(v.scaled_bound_ok);
  CHECK(to_string(v.status) == "fails");
}

TEST_CASE("additive bound never fails when gamma_bar_in >= gamma_bar_out") {
  testing::Gen g(77);
  for (int t = 0; t < 200; ++t) {
    ScorePairSpec s;
    s.n_in = g.index(2, 100);
    s.n_out = g.index(2, 100);
    s.gamma_in_mean = g.uniform(0, 3);
    s.gamma_out_mean = g.uniform(0, 3);
    s.score_in_mean = g.uniform(-2, 2);
    s.seed = static_cast<std::uint64_t>(t);
    const auto p = generate_score_pairs(s);
    const auto r = measure_separations(p.id_scores, p.ood_scores, p.id_gammas, p.ood_gammas);
    if (r.gamma_bar_in >= r.gamma_bar_out) CHECK(verify_theorems(r).shift_bound_ok);
  }
}

TEST_CASE("default score pairs satisfy the assumptions and the bounds") {
  int holds = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScorePairSpec s;
    s.seed = seed;
    const auto p = generate_score_pairs(s);
    const auto v =
        verify_theorems(measure_separations(p.id_scores, p.ood_scores, p.id_gammas, p.ood_gammas));
    holds += v.status == TheoremStatus::kHolds;
  }
  CHECK(holds == 20);
}
