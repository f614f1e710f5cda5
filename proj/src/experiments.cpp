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

#include "hts/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hts/diffusion.hpp"
#include "hts/parallel.hpp"

namespace hts {

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                              static_cast<double>(xs.size()));
  }
  return out;
}

Proportion ssc_statistic(const std::vector<RunStats>& runs, const ScalingPolicy& scaling, int p) {
  Proportion out;
  out.count = runs.size();
  if (runs.empty()) return out;
  const double level = 2.0 * scaling.theta_hat();
  std::size_t hits = 0;
  for (const auto& r : runs)
    if (r.sup_xhat[p] >= level) ++hits;
  const double f = static_cast<double>(hits) / static_cast<double>(runs.size());
  out.estimate = f;
  out.std_error = std::sqrt(f * (1.0 - f) / static_cast<double>(runs.size()));
  return out;
}

double rbar_statistic(const RunStats& run) { return run.rbar; }

ModeFidelity mode_fidelity(const RunStats& run, const SimModel& model) {
  if (!model.policy.dual())
    throw std::invalid_argument(std::string("mode fidelity needs a dual-mode policy, got ") +
                                to_string(model.policy.name));
  return {run.mode_low_violation, run.mode_high_violation};
}

ReplayStats replay_event_log(const std::vector<Event>& events, const SimModel& model,
                             const SimConfig& cfg) {
  const auto& pf = model.lp.product_form;
  const double rn = std::sqrt(model.scaling.n);
  const double gamma = model.params.gamma;
  const double band = 3.0 / std::min(pf.alpha[0], pf.alpha[1]) * model.scaling.theta_hat();
  const bool dual = model.policy.dual();
  const double zstar = model.policy.zstar.value_or(0.0);
  const double eps = effective_mode_eps(model, cfg);

  ReplayStats r;
  std::array<long, 2> x{};
  std::array<int, 2> serving{-1, -1};  // class in service per server
  double t = 0.0, disc = 1.0;

  auto integrate = [&](double tn) {
    const double dt = tn - t;
    if (dt <= 0.0) return;
    const double xh0 = static_cast<double>(x[0]) / rn, xh1 = static_cast<double>(x[1]) / rn;
    const double disc_n = std::exp(-gamma * tn);
    const double hx = model.params.h[0] * xh0 + model.params.h[1] * xh1;
    r.cost += hx * (disc - disc_n) / gamma;
    disc = disc_n;
    const double w = xh0 / pf.alpha[0] + xh1 / pf.alpha[1];
    double idle_weighted = 0.0;
    for (int k = 0; k < 2; ++k) {
      if (serving[k] >= 0) {
        r.busy[serving[k]][k] += dt;
      } else {
        r.idle[k] += dt;
        idle_weighted += pf.beta[k] * dt;
      }
    }
    if (w >= band) r.rbar += rn * idle_weighted;
    if (dual) {
      const Activity& nl = model.policy.low.nonbasic;
      const Activity& nh = model.policy.high.nonbasic;
      if (w <= zstar - eps && serving[nl.server] == nl.cls) r.mode_low_violation += dt;
      if (w >= zstar + eps && serving[nh.server] == nh.cls) r.mode_high_violation += dt;
    }
    t = tn;
  };

  for (const Event& e : events) {
    if (e.t > cfg.horizon) break;
    integrate(e.t);
    switch (e.kind) {
      case EventKind::Arrival: ++x[e.cls]; break;
      case EventKind::Start: serving[e.server] = e.cls; break;
      case EventKind::Completion:
        --x[e.cls];
        serving[e.server] = -1;
        break;
      case EventKind::ModeSwitch: break;
    }
    for (int i = 0; i < 2; ++i)
      r.sup_xhat[i] = std::max(r.sup_xhat[i], static_cast<double>(x[i]) / rn);
  }
  integrate(cfg.horizon);
  r.e_max = e_max(events, cfg.horizon);
  return r;
}

std::string compare_replay(const RunStats& s, const ReplayStats& r) {
  std::ostringstream os;
  os.precision(17);
  auto cmp = [&](const char* name, double a, double b) {
    if (a != b && os.tellp() == 0) os << name << ": streamed " << a << " replayed " << b;
  };
  cmp("cost", s.cost, r.cost);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) cmp("busy", s.busy[i][k], r.busy[i][k]);
  for (int k = 0; k < 2; ++k) cmp("idle", s.idle[k], r.idle[k]);
  cmp("rbar", s.rbar, r.rbar);
  cmp("mode_low_violation", s.mode_low_violation, r.mode_low_violation);
  cmp("mode_high_violation", s.mode_high_violation, r.mode_high_violation);
  for (int i = 0; i < 2; ++i) cmp("sup_xhat", s.sup_xhat[i], r.sup_xhat[i]);
  cmp("e_max", s.e_max, r.e_max);
  return os.str();
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

bool non_increasing_within_se(const std::vector<double>& est, const std::vector<double>& se) {
  for (std::size_t j = 0; j + 1 < est.size(); ++j)
    if (est[j + 1] > est[j] + std::sqrt(se[j] * se[j] + se[j + 1] * se[j + 1])) return false;
  return true;
}

void LadderConfig::validate() const {
  if (n_values.empty()) throw ConfigError("/ladder/n_values", "must not be empty");
  for (std::size_t j = 0; j < n_values.size(); ++j) {
    if (!(n_values[j] >= 1.0)) throw ConfigError("/ladder/n_values/" + std::to_string(j), "must be >= 1");
    if (j > 0 && !(n_values[j] > n_values[j - 1]))
      throw ConfigError("/ladder/n_values/" + std::to_string(j), "must be increasing");
  }
  if (replications < 30) throw ConfigError("/ladder/replications", "must be >= 30");
  if (replay_checks < 0 || replay_checks > replications)
    throw ConfigError("/ladder/replay_checks", "must be in [0, replications]");
  if (ks_limit_paths < 0) throw ConfigError("/ladder/ks_limit_paths", "must be >= 0");
}

namespace {

struct CellResult {
  RunStats stats;
  double w_at_ks = 0.0;
  bool replay_ok = true;
  bool log_ok = true;
  std::string problem;
};

}  // namespace

ConvergenceReport ao_experiment(const LadderConfig& ladder, const SystemParams& params,
                                const StreamDistributions& dists,
                                std::optional<PolicyName> policy) {
  ladder.validate();
  params.validate();
  dists.validate_against(params);
  if (dists.moment_order() <= ladder.m_moment)
    throw ConfigError("/distributions", "a stream has no finite moment of the configured order");
  const LpStructure lp = analyze_lp(params);
  const HjbClosedForm hjb = solve_hjb(wcp_coefficients(params, lp));
  const PolicySpec pol = make_policy(policy.value_or(applicable_policy(lp, hjb)), lp, hjb);

  ConvergenceReport rep;
  rep.policy = to_string(pol.name);
  rep.dual = pol.dual();
  rep.v0 = v0(params, lp, hjb);
  rep.zstar = hjb.zstar;
  rep.p = lp.p;
  rep.horizon = ladder.horizon > 0.0 ? ladder.horizon : 40.0 / params.gamma;
  rep.replications = ladder.replications;
  if (pol.needs_high_moments() && ladder.m_moment <= moment_order_m0()) {
    std::ostringstream os;
    os << "policy " << rep.policy << " is covered by the optimality result only for moment order > "
       << moment_order_m0() << "; configured " << ladder.m_moment;
    rep.warnings.push_back(os.str());
  }

  const double ks_time = ladder.ks_time > 0.0 ? ladder.ks_time : 10.0 / params.gamma;
  std::vector<double> limit_samples;
  if (ladder.ks_limit_paths > 0) {
    DiffusionSpec ds = spec_from_hjb(hjb);
    ds.horizon = ks_time;
    ds.reflection = Reflection::BridgeCorrected;
    limit_samples = terminal_samples(ds, static_cast<std::size_t>(ladder.ks_limit_paths),
                                     mix64(ladder.seed, 0xD1FFu), ladder.threads);
  }

  for (double n : ladder.n_values) {
    const SimModel model{params, lp, pol, ScalingPolicy::make(n, ladder.m_moment, ladder.a_bar)};
    SimConfig base;
    base.horizon = rep.horizon;
    base.mode_eps = ladder.mode_eps;
    if (ks_time <= rep.horizon) base.sample_period = ks_time;
    std::vector<CellResult> cells(static_cast<std::size_t>(ladder.replications));
    parallel_for(cells.size(), ladder.threads, [&](std::size_t r) {
      SimConfig cfg = base;
      cfg.record_events = static_cast<int>(r) < ladder.replay_checks;
      RenewalSource src(params, n, dists, ladder.seed, r);
      TrajectoryRecord rec = run(model, cfg, src);
      CellResult& c = cells[r];
      for (const auto& s : rec.samples)
        if (s.t == ks_time) c.w_at_ks = s.what;
      if (cfg.record_events) {
        c.problem = compare_replay(rec.stats, replay_event_log(rec.events, model, cfg));
        c.replay_ok = c.problem.empty();
        const std::string log_problem = check_event_log(rec.events, model);
        c.log_ok = log_problem.empty();
        if (c.problem.empty()) c.problem = log_problem;
      }
      c.stats = rec.stats;
    });

    LadderRow row;
    row.n = n;
    row.theta = model.scaling.theta;
    row.theta_hat = model.scaling.theta_hat();
    std::vector<RunStats> stats;
    std::vector<double> rbar, low, high, emax, m2, w_ks;
    for (const auto& c : cells) {
      stats.push_back(c.stats);
      rbar.push_back(rbar_statistic(c.stats));
      if (pol.dual()) {
        const auto mf = mode_fidelity(c.stats, model);
        low.push_back(mf.low_violation);
        high.push_back(mf.high_violation);
      }
      emax.push_back(c.stats.e_max);
      m2.push_back(c.stats.sup_what * c.stats.sup_what);
      w_ks.push_back(c.w_at_ks);
      row.replay_match = row.replay_match && c.replay_ok;
      const bool busy_ok = c.stats.max_busyness_error <= 1e-9 * std::max(1.0, rep.horizon);
      row.invariant_failures += c.stats.conservation_failures + c.stats.nonbasic_starts +
                                (busy_ok ? 0 : 1) + (c.log_ok ? 0 : 1);
    }
    row.cost = cost_estimate(stats, params, rep.horizon);
    row.ssc = ssc_statistic(stats, model.scaling, lp.p);
    row.rbar = mean_se(rbar);
    row.mode_low = mean_se(low);
    row.mode_high = mean_se(high);
    row.e_max_quantiles = {quantile(emax, 0.1), quantile(emax, 0.5), quantile(emax, 0.9)};
    row.sup_m2 = mean_se(m2);
    if (!limit_samples.empty() && base.sample_period > 0.0) {
      row.ks = ks_statistic(w_ks, limit_samples);
      row.ks_samples = w_ks.size();
    }
    rep.rows.push_back(row);
  }
  return rep;
}

std::string report_csv(const ConvergenceReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "n,statistic,estimate,se\n";
  for (const auto& row : r.rows) {
    os << row.n << ",cost," << row.cost.estimate << ',' << row.cost.std_error << '\n';
    os << row.n << ",cost_gap," << row.cost.estimate - r.v0 << ',' << row.cost.std_error << '\n';
    os << row.n << ",ssc," << row.ssc.estimate << ',' << row.ssc.std_error << '\n';
    os << row.n << ",rbar," << row.rbar.mean << ',' << row.rbar.std_error << '\n';
    if (r.dual) {
      os << row.n << ",mode_low_violation," << row.mode_low.mean << ',' << row.mode_low.std_error << '\n';
      os << row.n << ",mode_high_violation," << row.mode_high.mean << ','
         << row.mode_high.std_error << '\n';
    }
    os << row.n << ",e_max_q50," << row.e_max_quantiles[1] << ",\n";
    os << row.n << ",sup_what_m2," << row.sup_m2.mean << ',' << row.sup_m2.std_error << '\n';
    os << row.n << ",ks," << row.ks << ",\n";
  }
  return os.str();
}

}  // namespace hts
