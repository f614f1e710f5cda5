/*
   Copyright 2026 The hts Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <doctest.h>

#include <cmath>

#include "hts/experiments.hpp"
#include "hts/io.hpp"
#include "scenarios.hpp"

using namespace hts;

TEST_CASE("summary statistics") {
  const auto m = mean_se({1.0, 2.0, 3.0});
  CHECK(m.mean == 2.0);
  CHECK(m.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(quantile({5, 1, 3, 2, 4}, 0.5) == 3);
  CHECK(quantile({5, 1, 3, 2, 4}, 0.1) == 1);
  CHECK(quantile({5, 1, 3, 2, 4}, 1.0) == 5);
  CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_statistic({1, 2, 3}, {4, 5}) == 1.0);
  CHECK(ks_statistic({1, 2, 3}, {2, 3, 4}) == doctest::Approx(1.0 / 3));
  CHECK(non_increasing_within_se({3, 2, 1}, {0, 0, 0}));
  CHECK(non_increasing_within_se({1, 1.2, 1}, {0.2, 0.2, 0.2}));
  CHECK_FALSE(non_increasing_within_se({1, 2}, {0.1, 0.1}));
}

TEST_CASE("state-space collapse proportion") {
  const auto sc = ScalingPolicy::make(100, 3);
  std::vector<RunStats> runs(10);
  for (int r = 0; r < 3; ++r) runs[r].sup_xhat[1] = 2 * sc.theta_hat();
  runs[3].sup_xhat[0] = 10.0;  // other class does not count
  const auto p = ssc_statistic(runs, sc, 1);
  CHECK(p.estimate == doctest::Approx(0.3));
  CHECK(p.count == 10);  // runs behind the proportion
  CHECK(p.std_error == doctest::Approx(std::sqrt(0.3 * 0.7 / 10)));
}

TEST_CASE("mode fidelity needs a dual policy") {
  const auto p = scenarios::cs_reference();
  const auto lp = analyze_lp(p);
  const auto hjb = solve_hjb(wcp_coefficients(p, lp));
  const SimModel m{p, lp, make_policy(applicable_policy(lp, hjb), lp, hjb), ScalingPolicy::make(100, 3)};
  CHECK_THROWS_AS(mode_fidelity(RunStats{}, m), std::invalid_argument);
}

TEST_CASE("replayed statistics equal the streamed ones") {
  for (const auto& c : scenarios::six_cases()) {
    const auto lp = analyze_lp(c.params);
    const auto hjb = solve_hjb(wcp_coefficients(c.params, lp));
    const SimModel m{c.params, lp, make_policy(c.policy, lp, hjb), ScalingPolicy::make(400, 5)};
    SimConfig cfg;
    cfg.record_events = true;
    RenewalSource src(c.params, 400, StreamDistributions::defaults_for(c.params), 9, 0);
    const auto rec = run(m, cfg, src);
    const auto rep = replay_event_log(rec.events, m, cfg);
    CHECK(compare_replay(rec.stats, rep).empty());
    if (m.policy.dual()) {
      const auto f = mode_fidelity(rec.stats, m);
      CHECK(f.low_violation == rep.mode_low_violation);
      CHECK(f.high_violation == rep.mode_high_violation);
    }
    auto off = rep;
    off.cost = std::nextafter(off.cost, 1e300);
    CHECK(compare_replay(rec.stats, off).find("cost") != std::string::npos);
  }
}

TEST_CASE("ladder validation") {
  LadderConfig l;
  CHECK_NOTHROW(l.validate());
  l.n_values = {400, 100};
  try {
    l.validate();
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.path().rfind("/ladder/n_values", 0) == 0);
  }
  l = LadderConfig{};
  l.replications = 10;
  CHECK_THROWS_AS(l.validate(), ConfigError);
  l = LadderConfig{};
  l.replay_checks = l.replications + 1;
  CHECK_THROWS_AS(l.validate(), ConfigError);
}

TEST_CASE("small ladder is deterministic and consistent") {
  const auto p = scenarios::ss_reference();
  LadderConfig l;
  l.n_values = {100, 400};
  l.replications = 30;
  l.ks_limit_paths = 200;
  l.seed = 3;
  const auto d = StreamDistributions::defaults_for(p);
  const auto a = ao_experiment(l, p, d);
  const auto b = ao_experiment(l, p, d);
  CHECK(Json(a).dump() == Json(b).dump());
  CHECK(a.dual);
  CHECK(a.policy == "PP");
  REQUIRE(a.rows.size() == 2);
  for (const auto& r : a.rows) {
    CHECK(r.replay_match);
    CHECK(r.invariant_failures == 0);
    CHECK(r.ssc.estimate >= 0.0);
    CHECK(r.ssc.estimate <= 1.0);
    CHECK(r.e_max_quantiles[0] <= r.e_max_quantiles[1]);
    CHECK(r.e_max_quantiles[1] <= r.e_max_quantiles[2]);
  }
  const std::string csv = report_csv(a);
  CHECK(csv.rfind("n,statistic,estimate,se\n", 0) == 0);
  CHECK(csv.find("mode_high_violation") != std::string::npos);
  CHECK(report_csv(ao_experiment(l, scenarios::cs_reference(),
                                 StreamDistributions::defaults_for(scenarios::cs_reference())))
            .find("mode_") == std::string::npos);
}

TEST_CASE("moment-order warnings and refusals") {
  const auto cases = scenarios::six_cases();
  LadderConfig l;
  l.n_values = {100};
  l.replications = 30;
  l.ks_limit_paths = 50;
  l.m_moment = 3.0;
  const auto t2 = cases[1];
  REQUIRE(t2.policy == PolicyName::T2);
  const auto rep = ao_experiment(l, t2.params, StreamDistributions::defaults_for(t2.params));
  CHECK_FALSE(rep.warnings.empty());
  l.m_moment = 5.0;
  CHECK(ao_experiment(l, t2.params, StreamDistributions::defaults_for(t2.params)).warnings.empty());
  CHECK_THROWS_AS(ao_experiment(l, t2.params, StreamDistributions::defaults_for(t2.params), PolicyName::P),
                  MathError);
  SystemParams sub = scenarios::ss_reference();
  sub.lambda = {0.4, 1.2};
  CHECK_THROWS_AS(ao_experiment(l, sub, StreamDistributions::defaults_for(sub)), MathError);
}
