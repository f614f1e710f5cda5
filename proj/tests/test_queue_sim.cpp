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

#include <algorithm>
#include <map>

#include "hts/experiments.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

using namespace hts;

namespace {

SimModel model_for(const SystemParams& p, double n, double m, std::optional<PolicyName> name = {}) {
  const LpStructure lp = analyze_lp(p);
  const HjbClosedForm hjb = solve_hjb(wcp_coefficients(p, lp));
  return {p, lp, make_policy(name.value_or(applicable_policy(lp, hjb)), lp, hjb),
          ScalingPolicy::make(n, m)};
}

}  // namespace

TEST_CASE("threshold scaling") {
  CHECK(moment_order_m0() == doctest::Approx(4.5615528128));
  CHECK(zeta_bar(3.0) == doctest::Approx(1.0 / 12));
  const auto s = ScalingPolicy::make(10000, 3.0);
  CHECK(s.a_bar == doctest::Approx(11.0 / 24));
  CHECK(s.theta == 69);
  for (double n : {4.0, 100.0, 400.0, 1600.0, 1e5})
    for (double m : {2.5, 3.0, 4.0, 5.0, 8.0}) {
      CAPTURE(n);
      CAPTURE(m);
      CHECK(ScalingPolicy::make(n, m).theta == scenarios::theta_for(n, m));
    }
  CHECK(ScalingPolicy::make(4, 5).theta == 2);
  CHECK_NOTHROW(ScalingPolicy::make(100, 3.0, 0.45));
  CHECK_THROWS_AS(ScalingPolicy::make(100, 3.0, 0.40), ConfigError);
  CHECK_THROWS_AS(ScalingPolicy::make(100, 3.0, 0.5), ConfigError);
}

TEST_CASE("scaled rates") {
  SystemParams p = scenarios::ss_reference();
  p.lambda = {1.0, 2.4};
  p.lambda_hat = {2.0, 0.0};
  CHECK(scaled_rates(p, 100).lambda[0] == doctest::Approx(120.0));
  p.lambda_hat = {-20.0, 0.0};
  CHECK_THROWS_AS(scaled_rates(p, 4), MathError);
}

TEST_CASE("case table") {
  for (const auto& c : scenarios::six_cases()) {
    const auto lp = analyze_lp(c.params);
    const auto hjb = solve_hjb(wcp_coefficients(c.params, lp));
    CHECK(applicable_policy(lp, hjb) == c.policy);
    for (auto other : {PolicyName::P, PolicyName::T2, PolicyName::PP, PolicyName::T2T2,
                       PolicyName::T1T2, PolicyName::T2T1}) {
      if (other == c.policy) continue;
      try {
        make_policy(other, lp, hjb);
        FAIL("policy " << to_string(other) << " accepted for " << to_string(c.policy));
      } catch (const MathError& e) {
        CHECK(e.reason() == Refusal::PolicyCaseMismatch);
      }
    }
  }
  CHECK(policy_from_string("T2T1") == PolicyName::T2T1);
  CHECK_FALSE(policy_from_string("T3"));
}

TEST_CASE("scripted scenarios follow the rule interpreter") {
  for (const auto& sc : scenarios::trace_scenarios()) {
    CAPTURE(to_string(sc.instance.policy));
    const SimModel m = model_for(sc.instance.params, sc.n, sc.m_moment, sc.instance.policy);
    SimConfig cfg;
    cfg.horizon = sc.horizon;
    cfg.record_events = true;
    ScriptedSource src(sc.script.interarrival, sc.script.service);
    const auto got = run(m, cfg, src).events;
    const auto want = oracle::interpret(scenarios::rule_system(sc, m.lp, solve_hjb(wcp_coefficients(m.params, m.lp))), sc.script);
    CHECK(got.size() == want.size());
    CHECK(got == want);
    CHECK(check_event_log(got, m).empty());
  }
}

TEST_CASE("three jobs with equal gaps") {
  const auto c = scenarios::six_cases()[0];
  scenarios::TraceScenario sc{c, {}, 4.0, 5.0, 4.0};
  sc.script.interarrival = {std::vector<double>{1.0, 1.0}, std::vector<double>{1.0}};
  for (auto& row : sc.script.service)
    for (auto& s : row) s = {0.6};
  const SimModel m = model_for(c.params, sc.n, sc.m_moment);
  SimConfig cfg;
  cfg.horizon = sc.horizon;
  cfg.record_events = true;
  ScriptedSource src(sc.script.interarrival, sc.script.service);
  const auto rec = run(m, cfg, src);
  const auto want = oracle::interpret(scenarios::rule_system(sc, m.lp, solve_hjb(wcp_coefficients(m.params, m.lp))), sc.script);
  CHECK(rec.events == want);
  CHECK(rec.events.size() == 9);
  CHECK(rec.stats.arrivals[0] == 2);
  CHECK(rec.stats.arrivals[1] == 1);
  CHECK(rec.stats.e_max == doctest::Approx(1.0));
}

TEST_CASE("log checks reject tampered logs") {
  const auto sc = scenarios::trace_scenarios()[2];
  const SimModel m = model_for(sc.instance.params, sc.n, sc.m_moment);
  SimConfig cfg;
  cfg.horizon = sc.horizon;
  cfg.record_events = true;
  ScriptedSource src(sc.script.interarrival, sc.script.service);
  const auto log = run(m, cfg, src).events;
  REQUIRE(check_event_log(log, m).empty());

  // drop the first completion: the next start on that server preempts
  auto bad = log;
  const auto it = std::find_if(bad.begin(), bad.end(),
                               [](const Event& e) { return e.kind == EventKind::Completion; });
  REQUIRE(it != bad.end());
  bad.erase(it);
  CHECK_FALSE(check_event_log(bad, m).empty());

  // relabel a start with a later job of the same class
  bad = log;
  std::map<int, std::int64_t> last_arrival;
  for (const auto& e : log)
    if (e.kind == EventKind::Arrival) last_arrival[e.cls] = e.job;
  for (auto& e : bad)
    if (e.kind == EventKind::Start && e.job != last_arrival[e.cls]) {
      e.job = last_arrival[e.cls];
      break;
    }
  CHECK_FALSE(check_event_log(bad, m).empty());

  // a start on the non-basic activity of the current mode
  bad = log;
  const Activity nb = m.policy.low.nonbasic;
  bad.insert(bad.begin(), {0.0, EventKind::Arrival, nb.cls, -1, 999, -1});
  bad.insert(bad.begin() + 1, {0.0, EventKind::Start, nb.cls, nb.server, 999, -1});
  CHECK(check_event_log(bad, m).find("non-basic") != std::string::npos);
}

TEST_CASE("empty system") {
  const SimModel m = model_for(scenarios::ss_reference(), 100, 3);
  SimConfig cfg;
  cfg.horizon = 5.0;
  cfg.sample_period = 1.0;
  ScriptedSource src({std::vector<double>{}, std::vector<double>{}}, {});
  const auto rec = run(m, cfg, src);
  CHECK(rec.stats.cost == 0.0);
  CHECK(rec.stats.idle[0] == 5.0);
  CHECK(rec.stats.idle[1] == 5.0);
  for (const auto& s : rec.samples) {
    CHECK(s.x1 == 0);
    CHECK(s.x2 == 0);
    CHECK(s.ihat1 == doctest::Approx(std::sqrt(100.0) * s.t));
  }
  CHECK(ssc_statistic({rec.stats}, m.scaling, 0).estimate == 0.0);
  CHECK(rbar_statistic(rec.stats) == 0.0);
}

TEST_CASE("constant state cost") {
  // one class-1 job whose service outlasts the horizon
  const SystemParams p = scenarios::ss_reference();
  const SimModel m = model_for(p, 100, 3);
  SimConfig cfg;
  cfg.horizon = 10.0;
  const double t1 = 0.5;
  Mat2 huge{{{1e9, 1e9}, {1e9, 1e9}}};
  std::array<std::array<std::vector<double>, 2>, 2> svc;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) svc[i][k] = {huge[i][k]};
  ScriptedSource src({std::vector<double>{t1}, std::vector<double>{}}, svc);
  const auto rec = run(m, cfg, src);
  const double x = 1.0 / std::sqrt(100.0);
  const double want = p.h[0] * x * (std::exp(-p.gamma * t1) - std::exp(-p.gamma * cfg.horizon)) / p.gamma;
  CHECK(rec.stats.cost == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("bookkeeping on renewal runs") {
  for (const auto& c : scenarios::six_cases()) {
    CAPTURE(to_string(c.policy));
    const SimModel m = model_for(c.params, 100, 5);
    SimConfig cfg;
    cfg.horizon = 20.0;
    cfg.record_events = true;
    cfg.sample_period = 0.5;
    const auto dists = StreamDistributions::defaults_for(c.params);
    RenewalSource s1(c.params, 100, dists, 3, 0), s2(c.params, 100, dists, 3, 0);
    const auto a = run(m, cfg, s1), b = run(m, cfg, s2);
    CHECK(a.events == b.events);
    CHECK(a.stats.conservation_failures == 0);
    CHECK(a.stats.nonbasic_starts == 0);
    CHECK(a.stats.max_busyness_error <= 1e-9 * cfg.horizon);
    CHECK(check_event_log(a.events, m).empty());
    CHECK(e_max(a.events, cfg.horizon) == a.stats.e_max);
    // e_max bounds every completed service
    std::map<std::int64_t, double> start;
    double longest = 0.0;
    for (const auto& e : a.events) {
      if (e.kind == EventKind::Start) start[e.job] = e.t;
      if (e.kind == EventKind::Completion) longest = std::max(longest, e.t - start[e.job]);
    }
    CHECK(a.stats.e_max >= longest);
    // counts in the samples equal arrivals minus departures up to that time
    for (const auto& s : a.samples) {
      long x[2] = {0, 0};
      for (const auto& e : a.events) {
        if (e.t > s.t) break;
        if (e.kind == EventKind::Arrival) ++x[e.cls];
        if (e.kind == EventKind::Completion) --x[e.cls];
      }
      CHECK(s.x1 == x[0]);
      CHECK(s.x2 == x[1]);
    }
  }
}

TEST_CASE("cost estimates agree across seeds") {
  const auto p = scenarios::ss_reference();
  const SimModel m = model_for(p, 100, 3);
  SimConfig cfg;
  const auto dists = StreamDistributions::defaults_for(p);
  std::vector<RunStats> a, b;
  for (int r = 0; r < 60; ++r) {
    RenewalSource s1(p, 100, dists, 11, r), s2(p, 100, dists, 12, r);
    a.push_back(run(m, cfg, s1).stats);
    b.push_back(run(m, cfg, s2).stats);
  }
  const auto ea = cost_estimate(a, p, cfg.horizon), eb = cost_estimate(b, p, cfg.horizon);
  CHECK(std::abs(ea.estimate - eb.estimate) < 3 * std::hypot(ea.std_error, eb.std_error));
}

TEST_CASE("longest gap shrinks with n") {
  const auto p = scenarios::ss_reference();
  const auto dists = StreamDistributions::defaults_for(p);
  double prev = 1e300;
  for (double n : {100.0, 400.0, 1600.0}) {
    const SimModel m = model_for(p, n, 3);
    SimConfig cfg;
    cfg.horizon = 10.0;
    std::vector<double> e;
    for (int r = 0; r < 30; ++r) {
      RenewalSource s(p, n, dists, 5, r);
      e.push_back(run(m, cfg, s).stats.e_max);
    }
    const double med = quantile(e, 0.5);
    CHECK(med < prev);
    prev = med;
  }
}
