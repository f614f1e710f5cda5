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

#include "hts/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace hts {

// ------------------------------------------------------------------ scaling

double zeta_bar(double m) {
  if (!(m > 2.0)) throw ConfigError("/scaling/moment_order", "must be > 2");
  if (m <= moment_order_m0()) return (m - 2.0) / (4.0 * m);
  return (m * m - 5.0 * m + 2.0) / (2.0 * m * (3.0 * m - 2.0));
}

ScalingPolicy ScalingPolicy::make(double n, double m_moment, std::optional<double> a_bar) {
  if (!(n >= 1.0)) throw ConfigError("/scaling/n", "must be >= 1");
  const double lo = 0.5 - zeta_bar(m_moment);
  ScalingPolicy s;
  s.n = n;
  s.m_moment = m_moment;
  if (a_bar) {
    if (!(*a_bar > lo && *a_bar < 0.5)) {
      std::ostringstream os;
      os << "a_bar " << *a_bar << " outside (" << lo << ", 0.5) for moment order " << m_moment;
      throw ConfigError("/scaling/a_bar", os.str());
    }
    s.a_bar = *a_bar;
  } else {
    s.a_bar = 0.5 * (lo + 0.5);
  }
  s.theta = static_cast<long>(std::ceil(std::pow(n, s.a_bar)));
  return s;
}

// ----------------------------------------------------------------- policies

const char* to_string(PolicyName p) {
  switch (p) {
    case PolicyName::P: return "P";
    case PolicyName::T2: return "T2";
    case PolicyName::PP: return "PP";
    case PolicyName::T2T2: return "T2T2";
    case PolicyName::T1T2: return "T1T2";
    case PolicyName::T2T1: return "T2T1";
  }
  return "?";
}

const char* to_string(Rule r) {
  switch (r) {
    case Rule::P: return "P";
    case Rule::T1: return "T1";
    case Rule::T2: return "T2";
  }
  return "?";
}

std::optional<PolicyName> policy_from_string(const std::string& s) {
  for (auto p : {PolicyName::P, PolicyName::T2, PolicyName::PP, PolicyName::T2T2,
                 PolicyName::T1T2, PolicyName::T2T1})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

bool PolicySpec::needs_high_moments() const {
  return name == PolicyName::T2 || name == PolicyName::T2T2 || name == PolicyName::T1T2;
}

PolicyName applicable_policy(const LpStructure& lp, const HjbClosedForm& hjb) {
  const ModeCase& mc = hjb.mode_case;
  if (mc.is_single()) return lp.mode(mc.active).i1 == lp.p ? PolicyName::P : PolicyName::T2;
  const bool low1 = lp.mode(mc.low).i1 == lp.p;
  const bool high1 = lp.mode(mc.high).i1 == lp.p;
  if (low1 && high1) return PolicyName::PP;
  if (!low1 && !high1) return PolicyName::T2T2;
  return low1 ? PolicyName::T1T2 : PolicyName::T2T1;
}

PolicySpec make_policy(PolicyName name, const LpStructure& lp, const HjbClosedForm& hjb) {
  const ModeCase& mc = hjb.mode_case;
  const bool single_policy = name == PolicyName::P || name == PolicyName::T2;
  if (single_policy != mc.is_single())
    throw MathError(Refusal::PolicyCaseMismatch,
                    std::string(to_string(name)) + " requires the " +
                        (single_policy ? "single" : "dual") + "-mode condition");
  const PolicyName expected = applicable_policy(lp, hjb);
  if (name != expected) {
    std::ostringstream os;
    const int p = lp.p + 1;
    if (mc.is_single()) {
      os << to_string(name) << " requires i" << (name == PolicyName::P ? 1 : 2)
         << "(xi^A) = p = " << p << ", but i1(xi^A) = " << lp.mode(mc.active).i1 + 1;
    } else {
      os << to_string(name) << " does not match i1(xi^L) = " << lp.mode(mc.low).i1 + 1
         << ", i1(xi^H) = " << lp.mode(mc.high).i1 + 1 << ", p = " << p
         << " (case table gives " << to_string(expected) << ")";
    }
    throw MathError(Refusal::PolicyCaseMismatch, os.str());
  }
  PolicySpec ps;
  ps.name = name;
  if (mc.is_single()) {
    ps.low = ps.high = lp.mode(mc.active);
    ps.low_rule = ps.high_rule = name == PolicyName::P ? Rule::P : Rule::T2;
    return ps;
  }
  ps.low = lp.mode(mc.low);
  ps.high = lp.mode(mc.high);
  ps.zstar = hjb.zstar;
  switch (name) {
    case PolicyName::PP: ps.low_rule = ps.high_rule = Rule::P; break;
    case PolicyName::T2T2: ps.low_rule = ps.high_rule = Rule::T2; break;
    case PolicyName::T1T2: ps.low_rule = Rule::T1; ps.high_rule = Rule::T2; break;
    case PolicyName::T2T1: ps.low_rule = Rule::T2; ps.high_rule = Rule::T1; break;
    default: break;
  }
  return ps;
}

// --------------------------------------------------------------- primitives

ScaledRates scaled_rates(const SystemParams& params, double n) {
  ScaledRates r;
  const double rn = std::sqrt(n);
  for (int i = 0; i < 2; ++i) {
    r.lambda[i] = n * params.lambda[i] + rn * params.lambda_hat[i];
    if (!(r.lambda[i] > 0.0)) {
      std::ostringstream os;
      os << "lambda^n_" << i + 1 << " = " << r.lambda[i] << " at n = " << n;
      throw MathError(Refusal::NonpositiveRate, os.str());
    }
    for (int k = 0; k < 2; ++k) {
      r.mu[i][k] = n * params.mu[i][k] + rn * params.mu_hat[i][k];
      if (!(r.mu[i][k] > 0.0)) {
        std::ostringstream os;
        os << "mu^n_" << i + 1 << k + 1 << " = " << r.mu[i][k] << " at n = " << n;
        throw MathError(Refusal::NonpositiveRate, os.str());
      }
    }
  }
  return r;
}

StreamDistributions StreamDistributions::defaults_for(const SystemParams& params) {
  StreamDistributions d;
  for (int i = 0; i < 2; ++i) {
    d.arrival[i] = default_distribution(params.c2_arrival[i]);
    for (int k = 0; k < 2; ++k) d.service[i][k] = default_distribution(params.c2_service[i][k]);
  }
  return d;
}

void StreamDistributions::validate_against(const SystemParams& params) const {
  auto check = [](const DistributionSpec& d, double c2, const std::string& path) {
    d.validate(path);
    if (std::abs(d.scv() - c2) > 1e-9 * std::max(1.0, c2)) {
      std::ostringstream os;
      os << to_string(d.family) << " has SCV " << d.scv() << " but the system declares " << c2;
      throw ConfigError(path, os.str());
    }
  };
  for (int i = 0; i < 2; ++i) {
    check(arrival[i], params.c2_arrival[i], "/distributions/arrival/" + std::to_string(i));
    for (int k = 0; k < 2; ++k)
      check(service[i][k], params.c2_service[i][k],
            "/distributions/service/" + std::to_string(i) + "/" + std::to_string(k));
  }
}

double StreamDistributions::moment_order() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    m = std::min(m, arrival[i].moment_order());
    for (int k = 0; k < 2; ++k) m = std::min(m, service[i][k].moment_order());
  }
  return m;
}

RenewalSource::RenewalSource(const SystemParams& params, double n,
                             const StreamDistributions& dists, std::uint64_t seed,
                             std::uint64_t replication)
    : rates_(scaled_rates(params, n)) {
  samplers_.emplace_back(dists.arrival[0]);
  samplers_.emplace_back(dists.arrival[1]);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) samplers_.emplace_back(dists.service[i][k]);
  for (std::uint64_t s = 0; s < 6; ++s) streams_.emplace_back(seed, mix64(replication, s));
}

double RenewalSource::interarrival(int cls) {
  return samplers_[cls](streams_[cls]) / rates_.lambda[cls];
}

double RenewalSource::service(int cls, int server) {
  const int s = 2 + 2 * cls + server;
  return samplers_[s](streams_[s]) / rates_.mu[cls][server];
}

ScriptedSource::ScriptedSource(std::array<std::vector<double>, 2> interarrivals,
                               std::array<std::array<std::vector<double>, 2>, 2> services)
    : arr_(std::move(interarrivals)), svc_(std::move(services)) {}

double ScriptedSource::interarrival(int cls) {
  auto& pos = arr_pos_[cls];
  if (pos >= arr_[cls].size()) return std::numeric_limits<double>::infinity();
  return arr_[cls][pos++];
}

double ScriptedSource::service(int cls, int server) {
  const auto& v = svc_[cls][server];
  if (v.empty()) throw std::logic_error("ScriptedSource: no service times for activity");
  auto& pos = svc_pos_[cls][server];
  const double x = v[std::min(pos, v.size() - 1)];
  ++pos;
  return x;
}

// ------------------------------------------------------------------ records

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Start: return "start";
    case EventKind::Completion: return "completion";
    case EventKind::ModeSwitch: return "mode";
  }
  return "?";
}

double effective_mode_eps(const SimModel& model, const SimConfig& cfg) {
  if (cfg.mode_eps >= 0.0) return cfg.mode_eps;
  return model.policy.zstar ? *model.policy.zstar / 4.0 : 0.0;
}

// --------------------------------------------------------------- simulator

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ServerState {
  bool busy = false;
  int cls = -1;
  std::int64_t job = -1;
  double start = 0.0;
  double done = kInf;
};


class Simulator {
 public:
  Simulator(const SimModel& model, const SimConfig& cfg, PrimitiveSource& src)
      : m_(model), cfg_(cfg), src_(src) {
    const auto& pf = m_.lp.product_form;
    alpha_ = pf.alpha;
    beta_ = pf.beta;
    rn_ = std::sqrt(m_.scaling.n);
    theta_ = m_.scaling.theta;
    band_ = 3.0 / std::min(alpha_[0], alpha_[1]) * m_.scaling.theta_hat();
    dual_ = m_.policy.dual();
    zstar_ = m_.policy.zstar.value_or(0.0);
    eps_ = effective_mode_eps(m_, cfg_);
    sample_mode_at_arrivals_ =
        m_.policy.name == PolicyName::T1T2 || m_.policy.name == PolicyName::T2T1;
  }

  TrajectoryRecord run() {
    for (int i = 0; i < 2; ++i) next_arrival_[i] = draw_arrival(i, 0.0);
    for (;;) {
      // Ties: completions before arrivals, server 1 before 2, class 1 before 2.
      int ks = -1;
      double tc = kInf;
      for (int k = 0; k < 2; ++k)
        if (servers_[k].done < tc) {
          tc = servers_[k].done;
          ks = k;
        }
      int ia = -1;
      double ta = kInf;
      for (int i = 0; i < 2; ++i)
        if (next_arrival_[i] < ta) {
          ta = next_arrival_[i];
          ia = i;
        }
      const double tn = std::min(tc, ta);
      if (tn > cfg_.horizon) break;
      advance(tn);
      if (ks >= 0 && tc <= ta)
        complete(ks);
      else
        arrive(ia);
      after_event();
    }
    advance(cfg_.horizon);
    record_samples_through(cfg_.horizon, true);
    return std::move(rec_);
  }

 private:
  const Mode& mode() const { return cur_mode_ == 0 ? m_.policy.low : m_.policy.high; }
  Rule rule() const { return cur_mode_ == 0 ? m_.policy.low_rule : m_.policy.high_rule; }

  double draw_arrival(int i, double now) {
    const double t = now + src_.interarrival(i);
    return t > cfg_.arrival_cutoff ? kInf : t;
  }

  void log(EventKind kind, int cls, int server, std::int64_t job, int mode = -1) {
    if (cfg_.record_events) rec_.events.push_back({t_, kind, cls, server, job, mode});
  }

  double what() const {
    return (static_cast<double>(x_[0]) / rn_) / alpha_[0] +
           (static_cast<double>(x_[1]) / rn_) / alpha_[1];
  }

  // Integrates all time-based statistics over [t_, tn) with the state fixed.
  void advance(double tn) {
    record_samples_through(tn, false);
    const double dt = tn - t_;
    if (dt <= 0.0) return;
    auto& s = rec_.stats;
    const double disc_n = std::exp(-m_.params.gamma * tn);
    const double hx = m_.params.h[0] * (static_cast<double>(x_[0]) / rn_) +
                      m_.params.h[1] * (static_cast<double>(x_[1]) / rn_);
    s.cost += hx * (disc_ - disc_n) / m_.params.gamma;
    disc_ = disc_n;
    const double w = what();
    double idle_weighted = 0.0;
    for (int k = 0; k < 2; ++k) {
      if (servers_[k].busy) {
        s.busy[servers_[k].cls][k] += dt;
      } else {
        s.idle[k] += dt;
        idle_weighted += beta_[k] * dt;
      }
    }
    if (w >= band_) s.rbar += rn_ * idle_weighted;
    if (dual_) {
      const Activity& nl = m_.policy.low.nonbasic;
      const Activity& nh = m_.policy.high.nonbasic;
      const ServerState& sl = servers_[nl.server];
      const ServerState& sh = servers_[nh.server];
      if (w <= zstar_ - eps_ && sl.busy && sl.cls == nl.cls) s.mode_low_violation += dt;
      if (w >= zstar_ + eps_ && sh.busy && sh.cls == nh.cls) s.mode_high_violation += dt;
    }
    t_ = tn;
  }

  // Samples at grid times s with t_ <= s < tn (or <= tn at the end) see the
  // state in force on [t_, tn).
  void record_samples_through(double tn, bool inclusive) {
    if (!(cfg_.sample_period > 0.0)) return;
    for (;;) {
      const double s = static_cast<double>(next_sample_) * cfg_.sample_period;
      if (s > cfg_.horizon) return;
      if (inclusive ? s > tn : s >= tn) return;
      PathSample ps;
      ps.t = s;
      ps.x1 = x_[0];
      ps.x2 = x_[1];
      ps.xhat1 = static_cast<double>(x_[0]) / rn_;
      ps.xhat2 = static_cast<double>(x_[1]) / rn_;
      ps.what = what();
      double ik[2];
      for (int k = 0; k < 2; ++k)
        ik[k] = rec_.stats.idle[k] + (servers_[k].busy ? 0.0 : s - t_);
      ps.ihat1 = rn_ * ik[0];
      ps.ihat2 = rn_ * ik[1];
      ps.lhat = beta_[0] * ps.ihat1 + beta_[1] * ps.ihat2;
      ps.mode = cur_mode_;
      rec_.samples.push_back(ps);
      ++next_sample_;
    }
  }

  void arrive(int i) {
    auto& s = rec_.stats;
    ++s.arrivals[i];
    ++x_[i];
    const std::int64_t id = next_job_++;
    s.e_max = std::max(s.e_max, t_ - last_arrival_[i]);
    last_arrival_[i] = t_;
    queue_[i].push_back(id);
    log(EventKind::Arrival, i, -1, id);
    next_arrival_[i] = draw_arrival(i, t_);
    if (dual_ && sample_mode_at_arrivals_) sample_mode();
    dispatch();
  }

  void complete(int k) {
    auto& s = rec_.stats;
    ServerState& sv = servers_[k];
    const int i = sv.cls;
    ++s.departures[i][k];
    --x_[i];
    s.e_max = std::max(s.e_max, t_ - sv.start);
    log(EventKind::Completion, i, k, sv.job);
    sv = ServerState{};
    if (dual_) {
      if (sample_mode_at_arrivals_ || k == mode().k1) sample_mode();
    }
    dispatch();
  }

  void sample_mode() {
    const double w = static_cast<double>(x_[0]) / alpha_[0] + static_cast<double>(x_[1]) / alpha_[1];
    const int next = w < rn_ * zstar_ ? 0 : 1;
    if (next != cur_mode_) {
      cur_mode_ = next;
      ++rec_.stats.mode_switches;
      log(EventKind::ModeSwitch, -1, -1, -1, next);
    }
  }

  void start(int k, int i) {
    ServerState& sv = servers_[k];
    const std::int64_t id = queue_[i].front();
    queue_[i].pop_front();
    if (mode().nonbasic == Activity{i, k}) ++rec_.stats.nonbasic_starts;
    sv.busy = true;
    sv.cls = i;
    sv.job = id;
    sv.start = t_;
    sv.done = t_ + src_.service(i, k);
    log(EventKind::Start, i, k, id);
  }

  // Dedicated server first, so an arrival of its class goes to it when it
  // is free; then the prioritizing server.
  void dispatch() {
    const Mode& md = mode();
    if (!servers_[md.k1].busy && !queue_[md.i2].empty()) start(md.k1, md.i2);
    if (servers_[md.k2].busy) return;
    int prio = md.i1;
    switch (rule()) {
      case Rule::P: prio = md.i1; break;
      case Rule::T1: prio = x_[md.i1] >= theta_ ? md.i1 : md.i2; break;
      case Rule::T2: prio = x_[md.i2] >= theta_ ? md.i2 : md.i1; break;
    }
    if (!queue_[prio].empty())
      start(md.k2, prio);
    else if (!queue_[other(prio)].empty())
      start(md.k2, other(prio));
  }

  void after_event() {
    auto& s = rec_.stats;
    ++s.events;
    const double xh0 = static_cast<double>(x_[0]) / rn_, xh1 = static_cast<double>(x_[1]) / rn_;
    s.sup_xhat[0] = std::max(s.sup_xhat[0], xh0);
    s.sup_xhat[1] = std::max(s.sup_xhat[1], xh1);
    s.sup_hx = std::max(s.sup_hx, m_.params.h[0] * xh0 + m_.params.h[1] * xh1);
    s.sup_what = std::max(s.sup_what, what());
    if (!cfg_.check_invariants) return;
    for (int i = 0; i < 2; ++i)
      if (x_[i] != s.arrivals[i] - s.departures[i][0] - s.departures[i][1])
        ++s.conservation_failures;
    for (int k = 0; k < 2; ++k) {
      const double err = std::abs(s.idle[k] - (t_ - s.busy[0][k] - s.busy[1][k]));
      s.max_busyness_error = std::max(s.max_busyness_error, err);
    }
  }

  const SimModel& m_;
  const SimConfig& cfg_;
  PrimitiveSource& src_;
  Vec2 alpha_{}, beta_{};
  double rn_ = 1.0;
  long theta_ = 1;
  double band_ = 0.0;
  bool dual_ = false;
  double zstar_ = 0.0;
  double eps_ = 0.0;
  bool sample_mode_at_arrivals_ = false;

  double t_ = 0.0;
  double disc_ = 1.0;
  std::array<long, 2> x_{};
  std::array<std::deque<std::int64_t>, 2> queue_;
  std::array<ServerState, 2> servers_{};
  std::array<double, 2> next_arrival_{kInf, kInf};
  std::array<double, 2> last_arrival_{};
  std::int64_t next_job_ = 0;
  int cur_mode_ = 0;
  std::int64_t next_sample_ = 0;
  TrajectoryRecord rec_;
};

}  // namespace

TrajectoryRecord run(const SimModel& model, const SimConfig& cfg, PrimitiveSource& src) {
  if (!(cfg.horizon > 0.0)) throw ConfigError("/simulation/horizon", "must be > 0");
  Simulator sim(model, cfg, src);
  return sim.run();
}

QueueCostEstimate cost_estimate(const std::vector<RunStats>& runs, const SystemParams& params,
                                double horizon, double tail_tol) {
  if (runs.empty()) throw std::invalid_argument("cost_estimate: no replications");
  QueueCostEstimate out;
  double mean = 0.0, sup = 0.0;
  for (const auto& r : runs) {
    mean += r.cost;
    sup = std::max(sup, r.sup_hx);
  }
  mean /= static_cast<double>(runs.size());
  double ss = 0.0;
  for (const auto& r : runs) ss += (r.cost - mean) * (r.cost - mean);
  out.estimate = mean;
  if (runs.size() > 1)
    out.std_error = std::sqrt(ss / static_cast<double>(runs.size() - 1) /
                              static_cast<double>(runs.size()));
  out.tail_bound = sup * std::exp(-params.gamma * horizon) / params.gamma;
  if (out.tail_bound > tail_tol) {
    std::ostringstream os;
    os << "queue cost tail bound " << out.tail_bound << " exceeds " << tail_tol;
    throw MathError(Refusal::TailBoundExceeded, os.str());
  }
  return out;
}

double e_max(const std::vector<Event>& events, double t) {
  double best = 0.0;
  std::array<double, 2> last_arrival{};
  std::map<std::int64_t, double> started;
  for (const Event& e : events) {
    if (e.t > t) break;
    switch (e.kind) {
      case EventKind::Arrival:
        best = std::max(best, e.t - last_arrival[e.cls]);
        last_arrival[e.cls] = e.t;
        break;
      case EventKind::Start:
        started[e.job] = e.t;
        break;
      case EventKind::Completion: {
        auto it = started.find(e.job);
        if (it != started.end()) {
          best = std::max(best, e.t - it->second);
          started.erase(it);
        }
        break;
      }
      case EventKind::ModeSwitch:
        break;
    }
  }
  return best;
}

std::string check_event_log(const std::vector<Event>& events, const SimModel& model) {
  std::array<std::deque<std::int64_t>, 2> waiting;
  std::array<std::int64_t, 2> in_service{-1, -1};
  std::map<std::int64_t, int> job_class;
  int mode = 0;
  std::ostringstream err;
  for (std::size_t n = 0; n < events.size(); ++n) {
    const Event& e = events[n];
    switch (e.kind) {
      case EventKind::Arrival:
        waiting[e.cls].push_back(e.job);
        job_class[e.job] = e.cls;
        break;
      case EventKind::Start: {
        if (in_service[e.server] != -1) {
          err << "event " << n << ": server " << e.server + 1 << " started job " << e.job
              << " while serving job " << in_service[e.server];
          return err.str();
        }
        if (waiting[e.cls].empty() || waiting[e.cls].front() != e.job) {
          err << "event " << n << ": job " << e.job << " of class " << e.cls + 1
              << " started out of FIFO order";
          return err.str();
        }
        const Mode& md = mode == 0 ? model.policy.low : model.policy.high;
        if (md.nonbasic == Activity{e.cls, e.server}) {
          err << "event " << n << ": non-basic activity (" << e.cls + 1 << "," << e.server + 1
              << ") started in mode " << mode;
          return err.str();
        }
        waiting[e.cls].pop_front();
        in_service[e.server] = e.job;
        break;
      }
      case EventKind::Completion:
        if (in_service[e.server] != e.job) {
          err << "event " << n << ": completion of job " << e.job << " on server "
              << e.server + 1 << " which was not serving it";
          return err.str();
        }
        in_service[e.server] = -1;
        break;
      case EventKind::ModeSwitch:
        mode = e.mode;
        break;
    }
  }
  return {};
}

}  // namespace hts
