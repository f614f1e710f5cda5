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

#pragma once

// Test-side oracles. Nothing here calls the library routine it is used to
// check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "hts/queue_sim.hpp"

namespace oracle {

using hts::Mat2;
using hts::Vec2;

// ------------------------------------------------------------- instances

/// Product-form critical instance with alpha, beta and the load split u
/// drawn uniformly, rejecting draws within `margin` of the degenerate
/// (lambda_i = mu_ik) and boundary (max lambda/alpha = max beta) sets.
inline hts::SystemParams random_critical(std::mt19937_64& g, double margin = 1e-3) {
  std::uniform_real_distribution<double> ua(0.5, 4.0), ub(0.1, 0.9), uu(0.05, 0.95);
  for (;;) {
    const double a1 = ua(g), a2 = ua(g), b1 = ub(g), u = uu(g);
    const double b2 = 1.0 - b1;
    const double loads[2] = {u, 1.0 - u};
    bool ok = std::abs(std::max(u, 1.0 - u) - std::max(b1, b2)) > margin;
    for (double l : loads)
      for (double b : {b1, b2}) ok = ok && std::abs(l - b) > margin;
    if (!ok) continue;
    hts::SystemParams p;
    p.lambda = {u * a1, (1.0 - u) * a2};
    p.mu = {{{a1 * b1, a1 * b2}, {a2 * b1, a2 * b2}}};
    return p;
  }
}

// --------------------------------------------------------- cost oracles

/// Roots of (s^2/2) r^2 + b r - g = 0, negative first.
inline std::array<double, 2> char_roots(double b, double s, double g) {
  const double d = std::sqrt(b * b + 2.0 * g * s * s);
  return {(-b - d) / (s * s), (-b + d) / (s * s)};
}

/// Discounted cost of reflected BM with constant (b, s) from x:
/// x/g + b/g^2 + A e^{r- x} with A fixed by u'(0) = 0.
inline double rbm_cost(double x, double b, double s, double g) {
  const double rm = char_roots(b, s, g)[0];
  return x / g + b / (g * g) - std::exp(rm * x) / (g * rm);
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
inline std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = m[r][3];
    for (int k = r + 1; k < 3; ++k) s -= m[r][k] * x[k];
    x[r] = s / m[r][r];
  }
  return x;
}

/// Cost of using (bl, sl) on [0, z] and (bh, sh) above z, from x. Unknowns
/// A, B, C of
///   x <= z: x/g + bl/g^2 + A e^{r- x} + B e^{r+ (x - z)}
///   x >  z: x/g + bh/g^2 + C e^{R- (x - z)}
/// from u'(0) = 0 and C^1 matching at z.
inline double switched_cost(double x, double z, double bl, double sl, double bh, double sh,
                            double g) {
  const auto lo = char_roots(bl, sl, g);
  const double rm = lo[0], rp = lo[1];
  const double Rm = char_roots(bh, sh, g)[0];
  const double ez = std::exp(rm * z), e0 = std::exp(-rp * z);
  std::array<std::array<double, 4>, 3> m{};
  m[0] = {rm, rp * e0, 0.0, -1.0 / g};
  m[1] = {ez, 1.0, -1.0, (bh - bl) / (g * g)};
  m[2] = {rm * ez, rp, -Rm, 0.0};
  const auto s = solve3(m);
  if (x <= z)
    return x / g + bl / (g * g) + s[0] * std::exp(rm * x) + s[1] * std::exp(rp * (x - z));
  return x / g + bh / (g * g) + s[2] * std::exp(Rm * (x - z));
}

// ------------------------------------------------------------ skorokhod

/// eta(j) = max(0, max_{i <= j} -psi(i)) by scanning the whole prefix.
inline std::vector<double> prefix_sup_eta(const std::vector<double>& psi) {
  std::vector<double> eta(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i <= j; ++i) m = std::max(m, -psi[i]);
    eta[j] = m;
  }
  return eta;
}

// ---------------------------------------------------- policy interpreter

struct Script {
  std::array<std::vector<double>, 2> interarrival;
  std::array<std::array<std::vector<double>, 2>, 2> service;
};

/// Inputs of the rule interpreter, stated in terms of modes, rules and
/// thresholds rather than the simulator's structures.
struct RuleSystem {
  Mat2 xi_low{}, xi_high{};  // equal for single-mode policies
  char rule_low = 'P', rule_high = 'P';  // 'P', '1' (T1) or '2' (T2)
  bool dual = false;
  bool sample_at_every_event = false;  // T1T2 / T2T1
  Vec2 alpha{};
  double zstar = 0.0;
  double n = 1.0;
  long theta = 1;
  double horizon = 0.0;
};

/// Replays the scenario one event at a time: completions before arrivals,
/// server 1 before server 2, class 1 before class 2 on equal times.
inline std::vector<hts::Event> interpret(const RuleSystem& sys, const Script& sc) {
  using hts::Event;
  using hts::EventKind;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Event> log;

  // absolute arrival times per class
  std::array<std::vector<double>, 2> arr;
  for (int i = 0; i < 2; ++i) {
    double t = 0.0;
    for (double a : sc.interarrival[i]) {
      t += a;
      arr[i].push_back(t);
    }
  }
  std::array<std::size_t, 2> next_arr{0, 0};
  std::array<std::array<std::size_t, 2>, 2> used{};
  std::array<long, 2> in_system{0, 0};
  std::array<std::deque<std::int64_t>, 2> waiting;
  std::array<int, 2> srv_cls{-1, -1};
  std::array<std::int64_t, 2> srv_job{-1, -1};
  std::array<double, 2> srv_end{inf, inf};
  std::int64_t jobs = 0;
  int mode = 0;
  double now = 0.0;

  auto current_xi = [&]() -> const Mat2& { return mode == 0 ? sys.xi_low : sys.xi_high; };
  auto current_rule = [&] { return mode == 0 ? sys.rule_low : sys.rule_high; };
  // zero entry of the mode: (single-activity class, single-activity server)
  auto roles = [&](int& i1, int& k1) {
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        if (current_xi()[i][k] == 0.0) {
          i1 = i;
          k1 = k;
        }
  };
  auto service_time = [&](int i, int k) {
    const auto& list = sc.service[i][k];
    const double s = used[i][k] < list.size() ? list[used[i][k]] : list.back();
    ++used[i][k];
    return s;
  };
  auto begin = [&](int k, int i) {
    const std::int64_t job = waiting[i].front();
    waiting[i].pop_front();
    srv_cls[k] = i;
    srv_job[k] = job;
    srv_end[k] = now + service_time(i, k);
    log.push_back({now, EventKind::Start, i, k, job, -1});
  };
  auto assign = [&] {
    int i1 = 0, k1 = 0;
    roles(i1, k1);
    const int i2 = 1 - i1, k2 = 1 - k1;
    // server k1 only ever serves class i2
    if (srv_cls[k1] < 0 && !waiting[i2].empty()) begin(k1, i2);
    if (srv_cls[k2] >= 0) return;
    int first = i1;
    if (current_rule() == '1' && in_system[i1] < sys.theta) first = i2;
    if (current_rule() == '2' && in_system[i2] >= sys.theta) first = i2;
    if (!waiting[first].empty())
      begin(k2, first);
    else if (!waiting[1 - first].empty())
      begin(k2, 1 - first);
  };
  auto resample = [&] {
    const double w = in_system[0] / sys.alpha[0] + in_system[1] / sys.alpha[1];
    const int m = w < std::sqrt(sys.n) * sys.zstar ? 0 : 1;
    if (m != mode) {
      mode = m;
      log.push_back({now, EventKind::ModeSwitch, -1, -1, -1, m});
    }
  };

  for (;;) {
    int k = srv_end[0] <= srv_end[1] ? 0 : 1;
    const double tc = srv_end[k];
    double ta = inf;
    int c = -1;
    for (int i = 0; i < 2; ++i)
      if (next_arr[i] < arr[i].size() && arr[i][next_arr[i]] < ta) {
        ta = arr[i][next_arr[i]];
        c = i;
      }
    if (std::min(tc, ta) > sys.horizon) break;
    if (tc <= ta) {
      now = tc;
      int i1 = 0, k1 = 0;
      roles(i1, k1);
      const int i = srv_cls[k];
      log.push_back({now, EventKind::Completion, i, k, srv_job[k], -1});
      --in_system[i];
      srv_cls[k] = -1;
      srv_job[k] = -1;
      srv_end[k] = inf;
      if (sys.dual && (sys.sample_at_every_event || k == k1)) resample();
    } else {
      now = ta;
      ++next_arr[c];
      const std::int64_t job = jobs++;
      ++in_system[c];
      waiting[c].push_back(job);
      log.push_back({now, EventKind::Arrival, c, -1, job, -1});
      if (sys.dual && sys.sample_at_every_event) resample();
    }
    assign();
  }
  return log;
}

}  // namespace oracle
