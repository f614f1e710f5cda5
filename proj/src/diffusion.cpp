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

#include "hts/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hts/parallel.hpp"
#include "hts/rng.hpp"

namespace hts {

namespace {

// -log of the smallest uniform u32_to_open01 can produce. A bridge whose
// reflection threshold exceeds this can never reflect.
const double kMaxExpDraw = -std::log(u32_to_open01(0));

struct Stepper {
  struct Side {
    double bdt, ssq;  // b dt and sigma sqrt(dt)
    double k;         // 2 / (sigma^2 dt)
    double s;
  };
  Side side[2];  // [0] on z <= z*, [1] above
  double b_lo, s_lo, b_hi, s_hi, zstar;
  double dt;
  double odds_down, tilt;  // leaving z*: (1 - p) / p and b_hi/s_hi + b_lo/s_lo

  explicit Stepper(const DiffusionSpec& spec) {
    if (spec.kind == DiffusionSpec::Kind::Rbm) {
      b_lo = b_hi = spec.b;
      s_lo = s_hi = spec.sigma;
      zstar = 0.0;
    } else {
      b_lo = spec.b_low;
      s_lo = spec.sigma_low;
      b_hi = spec.b_high;
      s_hi = spec.sigma_high;
      zstar = spec.zstar;
    }
    dt = spec.dt;
    const double sqdt = std::sqrt(dt);
    side[0] = {b_lo * dt, s_lo * sqdt, 2.0 / (s_lo * s_lo * dt), s_lo};
    side[1] = {b_hi * dt, s_hi * sqdt, 2.0 / (s_hi * s_hi * dt), s_hi};
    odds_down = s_hi / s_lo;
    tilt = b_hi / s_hi + b_lo / s_lo;
  }

  // Advances z by one step; returns the boundary increment. Both sides'
  // increments are formed before z is compared, since z sits near z* often.
  template <bool Bridge, bool Switched, class Rng>
  [[gnu::always_inline]] double step(double& z, Rng& rng) const {
    const double normal = rng.next_normal();
    const double dx_lo = side[0].bdt + side[0].ssq * normal;
    const double dx_hi = side[1].bdt + side[1].ssq * normal;
    const bool high = z > zstar;
    const Side& c = side[high];
    const double dx = high ? dx_hi : dx_lo;
    const double y = z + dx;
    if constexpr (!Bridge) {
      if (y < 0.0) {
        z = 0.0;
        return -y;
      }
      z = y;
      return 0.0;
    } else {
      if constexpr (Switched) {
        // a <= 0: the free path crossed z* or started on it
        const double a = c.k * (z - zstar) * (y - zstar);
        if (a < kMaxExpDraw) [[unlikely]] {
          if (a <= 0.0 || below_exp(rng.next_uniform(), a)) return cross(z, (y - zstar) / c.s, rng);
        }
      }
      // Minimum of the bridge relative to its start is
      // m = (dx - sqrt(dx^2 + 2 s^2 dt E)) / 2 with E exponential; the path
      // reflects iff z + m < 0, i.e. E > 2 z y / (s^2 dt), always if y <= 0.
      const double a = c.k * z * y;
      if (a < kMaxExpDraw) [[unlikely]] {
        const double u = rng.next_uniform();
        if (a <= 0.0 || below_exp(u, a)) return reflect(z, dx, c.s * c.s * dt, u);
      }
      z = y;
      return 0.0;
    }
  }

  [[gnu::noinline]] static double reflect(double& z, double dx, double s2dt, double u) {
    const double m = 0.5 * (dx - std::sqrt(dx * dx - 2.0 * s2dt * std::log(u)));
    const double dl = -(z + m);
    z = dx - m;
    return dl;
  }

  // In y = (z - z*) / sigma the process is a skew Brownian motion at 0:
  // the path from z to the free end touches z* with the bridge probability
  // exp(-2 x y / dt), and after touching it ends above z* with probability
  // sigma_low / (sigma_low + sigma_high), at the same |y|. Each side is then
  // reweighted by its drift over that distance (first order in |y|).
  // u < exp(-a) for a >= 0, i.e. -log(u) > a, deciding by the bounds
  // 1 - a <= exp(-a) <= 1 / (1 + a) before evaluating the exponential.
  static bool below_exp(double u, double a) {
    if (u * (1.0 + a) >= 1.0) return false;
    if (u < 1.0 - a) return true;
    return u < std::exp(-a);
  }

  template <class Rng>
  double cross(double& z, double y, Rng& rng) const {
    // up with weight p e^{c_hi |y|} against (1 - p) e^{-c_lo |y|}
    const double mag = std::abs(y);
    const bool up = rng.next_uniform() * (1.0 + odds_down * std::exp(-tilt * mag)) < 1.0;
    z = up ? zstar + mag * s_hi : zstar - mag * s_lo;
    if (z >= 0.0) return 0.0;
    const double dl = -z;  // also reached 0 within the step: project
    z = 0.0;
    return dl;
  }
};

// Drives one path; sink(j, z_j, l_j) is called for j = 0..steps. Each path
// reads its own Philox stream: one draw per step for the normal (rarely
// more), plus bridge uniforms only on steps that can reach 0 or z*.
template <class Sink>
void run_path(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t path,
              Sink&& sink) {
  const Stepper st(spec);
  const std::size_t n = spec.steps();
  PhiloxStream rng(seed, path);
  double z = spec.z0, l = 0.0;
  sink(std::size_t{0}, z, l);
  auto loop = [&]<bool Bridge, bool Switched>() {
    for (std::size_t j = 1; j <= n; ++j) {
      l += st.step<Bridge, Switched>(z, rng);
      sink(j, z, l);
    }
  };
  const bool switched = spec.kind == DiffusionSpec::Kind::Switched;
  if (spec.reflection == Reflection::Projection)
    loop.template operator()<false, false>();
  else if (switched)
    loop.template operator()<true, true>();
  else
    loop.template operator()<true, false>();
}

struct CostSink {
  double decay, disc = 1.0, prev = 0.0, sum = 0.0, zmax = 0.0;
  double half_dt;

  CostSink(double gamma, double dt) : decay(std::exp(-gamma * dt)), half_dt(0.5 * dt) {}

  void operator()(std::size_t j, double z, double) {
    const double cur = disc * z;
    if (j > 0) sum += half_dt * (prev + cur);
    prev = cur;
    disc *= decay;
    zmax = std::max(zmax, z);
  }
};

CostEstimate summarize(const std::vector<double>& costs, double zmax, double gamma,
                       double horizon, double tail_tol) {
  CostEstimate out;
  out.paths = costs.size();
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= static_cast<double>(costs.size());
  double ss = 0.0;
  for (double c : costs) ss += (c - mean) * (c - mean);
  out.estimate = mean;
  out.std_error = costs.size() > 1
                      ? std::sqrt(ss / static_cast<double>(costs.size() - 1) /
                                  static_cast<double>(costs.size()))
                      : 0.0;
  out.tail_bound = zmax * std::exp(-gamma * horizon) / gamma;
  if (out.tail_bound > tail_tol) {
    std::ostringstream os;
    os << "tail bound " << out.tail_bound << " exceeds tolerance " << tail_tol;
    throw MathError(Refusal::TailBoundExceeded, os.str());
  }
  return out;
}

}  // namespace

void DiffusionSpec::validate() const {
  if (!(dt > 0.0)) throw ConfigError("/diffusion/dt", "must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("/diffusion/horizon", "must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("/diffusion/gamma", "must be > 0");
  if (!(z0 >= 0.0)) throw ConfigError("/diffusion/z0", "must be >= 0");
  if (kind == Kind::Rbm) {
    if (!(sigma > 0.0)) throw ConfigError("/diffusion/sigma", "must be > 0");
  } else {
    if (!(sigma_low > 0.0)) throw ConfigError("/diffusion/sigma_low", "must be > 0");
    if (!(sigma_high > 0.0)) throw ConfigError("/diffusion/sigma_high", "must be > 0");
    if (!(zstar > 0.0)) throw ConfigError("/diffusion/zstar", "must be > 0");
  }
}

std::size_t DiffusionSpec::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

DiffusionSpec spec_from_hjb(const HjbClosedForm& hjb, double dt) {
  const NormalizedPair n = normalize(hjb.coeffs);
  DiffusionSpec s;
  s.gamma = n.gamma;
  s.dt = dt;
  s.horizon = 40.0 / n.gamma;
  if (hjb.zstar) {
    s.kind = DiffusionSpec::Kind::Switched;
    s.b_low = n.b1;
    s.sigma_low = n.sigma1;
    s.b_high = n.b2;
    s.sigma_high = n.sigma2;
    s.zstar = *hjb.zstar;
  } else {
    s.b = n.b2;
    s.sigma = n.sigma2;
  }
  return s;
}

SkorokhodResult skorokhod_map(const std::vector<double>& psi) {
  SkorokhodResult r;
  r.phi.resize(psi.size());
  r.eta.resize(psi.size());
  double eta = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    eta = std::max(eta, -psi[j]);
    r.eta[j] = eta;
    r.phi[j] = psi[j] + eta;
  }
  return r;
}

ReflectedPath simulate(const DiffusionSpec& spec, std::uint64_t seed,
                       std::uint64_t path_index) {
  spec.validate();
  ReflectedPath p;
  p.dt = spec.dt;
  p.z.resize(spec.steps() + 1);
  p.l.resize(spec.steps() + 1);
  run_path(spec, seed, path_index, [&](std::size_t j, double z, double l) {
    p.z[j] = z;
    p.l[j] = l;
  });
  return p;
}

double path_discounted_cost(const ReflectedPath& path, double gamma) {
  CostSink sink(gamma, path.dt);
  for (std::size_t j = 0; j < path.z.size(); ++j) sink(j, path.z[j], 0.0);
  return sink.sum;
}

CostEstimate discounted_cost(const std::vector<ReflectedPath>& paths, double gamma,
                             double tail_tol) {
  if (paths.empty()) throw std::invalid_argument("discounted_cost: no paths");
  std::vector<double> costs;
  double zmax = 0.0, horizon = 0.0;
  for (const auto& p : paths) {
    costs.push_back(path_discounted_cost(p, gamma));
    for (double z : p.z) zmax = std::max(zmax, z);
    horizon = p.time(p.z.size() - 1);
  }
  return summarize(costs, zmax, gamma, horizon, tail_tol);
}

CostEstimate estimate_cost(const DiffusionSpec& spec, std::size_t n_paths,
                           std::uint64_t seed, unsigned threads, double tail_tol) {
  spec.validate();
  if (n_paths == 0) throw std::invalid_argument("estimate_cost: no paths");
  std::vector<double> costs(n_paths), maxima(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    CostSink sink(spec.gamma, spec.dt);
    run_path(spec, seed, i, sink);
    costs[i] = sink.sum;
    maxima[i] = sink.zmax;
  });
  const double zmax = *std::max_element(maxima.begin(), maxima.end());
  const double horizon = static_cast<double>(spec.steps()) * spec.dt;
  return summarize(costs, zmax, spec.gamma, horizon, tail_tol);
}

std::vector<double> terminal_samples(const DiffusionSpec& spec, std::size_t n_paths,
                                     std::uint64_t seed, unsigned threads) {
  spec.validate();
  std::vector<double> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    double last = 0.0;
    run_path(spec, seed, i, [&](std::size_t, double z, double) { last = z; });
    out[i] = last;
  });
  return out;
}

double occupation_near(const ReflectedPath& path, double center, double eps) {
  std::size_t count = 0;
  for (double z : path.z)
    if (std::abs(z - center) < eps) ++count;
  return path.dt * static_cast<double>(count);
}

}  // namespace hts
