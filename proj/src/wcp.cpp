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

#include "hts/wcp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hts {

namespace {

// Relative tolerance for treating two drifts (or two diffusivities) as equal
// when deciding between the single and dual mode conditions.
constexpr double kTieTol = 1e-10;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kTieTol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Positive root magnitude (b + sqrt(b^2 + 2 g s^2)) / s^2 without cancellation.
double positive_exponent(double b, double s, double g) {
  const double d = std::sqrt(b * b + 2.0 * g * s * s);
  return b >= 0.0 ? (b + d) / (s * s) : 2.0 * g / (d - b);
}

// (b - sqrt(b^2 + 2 g s^2)) / s^2, always negative.
double negative_exponent(double b, double s, double g) {
  const double d = std::sqrt(b * b + 2.0 * g * s * s);
  return b <= 0.0 ? (b - d) / (s * s) : -2.0 * g / (d + b);
}

struct DualTerms {
  double q1;  // coefficient of e^{-beta x} on [0, z]
  double q2;  // coefficient of e^{nu (z - x)} on [0, z]
  double p3;  // coefficient of e^{-rho (x - z)} on [z, inf)
};

// Constants of the switching-policy cost. Unknowns are scaled so every
// exponential that appears is e^{-(positive) * distance} <= 1:
//   beta q1 + nu e^{nu z} q2                 = 1/g          (u'(0) = 0)
//   e^{-beta z} q1 + q2 - p3                 = -(b1-b2)/g^2 (continuity)
//   beta e^{-beta z} q1 + nu q2 - rho p3     = 0            (C^1 at z)
// The determinant is strictly negative for every z > 0.
DualTerms dual_terms(const NormalizedPair& n, const Exponents& e, double z) {
  const double g = n.gamma;
  const double delta = n.b1 - n.b2;
  const double s = std::exp(e.nu * z);
  const double eb = std::exp(-e.beta * z);
  const double det = e.beta * (e.nu - e.rho) - e.nu * s * eb * (e.beta - e.rho);
  DualTerms t;
  t.q1 = ((e.nu - e.rho) / g - e.nu * s * e.rho * delta / (g * g)) / det;
  t.q2 = (e.beta * e.rho * delta / (g * g) - eb * (e.beta - e.rho) / g) / det;
  t.p3 = (e.beta * e.nu * delta / (g * g) * (1.0 - s * eb) + eb * (e.nu - e.beta) / g) / det;
  return t;
}

double dual_value(const NormalizedPair& n, const Exponents& e, double x, double z) {
  const double g = n.gamma;
  const DualTerms t = dual_terms(n, e, z);
  if (x <= z)
    return x / g + n.b1 / (g * g) + t.q1 * std::exp(-e.beta * x) +
           t.q2 * std::exp(e.nu * (z - x));
  return x / g + n.b2 / (g * g) + t.p3 * std::exp(-e.rho * (x - z));
}

double dual_residual(const NormalizedPair& n, const Exponents& e, double z) {
  const DualTerms t = dual_terms(n, e, z);
  return e.beta * e.beta * t.q1 * std::exp(-e.beta * z) + e.nu * e.nu * t.q2 -
         e.rho * e.rho * t.p3;
}

double bisect_zstar(const NormalizedPair& n) {
  const Exponents e = exponents(n);
  auto f = [&](double z) { return dual_residual(n, e, z); };
  double lo = 1e-6, hi = 1.0;
  double flo = f(lo), fhi = f(hi);
  while (std::signbit(flo) == std::signbit(fhi) && fhi != 0.0) {
    if (hi >= 1e6) {
      std::ostringstream os;
      os << "smooth-fit residual has no sign change on [1e-6, 1e6] (b1=" << n.b1
         << ", b2=" << n.b2 << ", sigma1=" << n.sigma1 << ", sigma2=" << n.sigma2
         << ")";
      throw MathError(Refusal::NoBracket, os.str());
    }
    lo = hi;
    flo = fhi;
    hi *= 4.0;
    fhi = f(hi);
  }
  if (fhi == 0.0) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

}  // namespace

WcpCoefficients WcpCoefficients::from_modes(Vec2 b, Vec2 sigma, double gamma) {
  WcpCoefficients c;
  c.b = b;
  c.sigma = sigma;
  c.gamma = gamma;
  return c;
}

DriftDiffusion drift_diffusion(const SystemParams& params, const ProductForm& pf,
                               const Mat2& xi) {
  DriftDiffusion out;
  for (int i = 0; i < 2; ++i) {
    double served = 0.0, noise = params.lambda[i] * params.c2_arrival[i];
    for (int k = 0; k < 2; ++k) {
      served += params.mu_hat[i][k] * xi[i][k];
      noise += params.mu[i][k] * params.c2_service[i][k] * xi[i][k];
    }
    out.b += (params.lambda_hat[i] - served) / pf.alpha[i];
    out.sigma2 += noise / (pf.alpha[i] * pf.alpha[i]);
  }
  return out;
}

WcpCoefficients wcp_coefficients(const SystemParams& params, const LpStructure& lp) {
  WcpCoefficients c;
  c.gamma = params.gamma;
  for (int m = 0; m < 2; ++m) {
    const auto dd = drift_diffusion(params, lp.product_form, lp.mode(m).xi);
    c.b[m] = dd.b;
    c.sigma[m] = std::sqrt(dd.sigma2);
  }
  for (int i = 0; i < 2; ++i) {
    c.sigma_A[i] = std::sqrt(params.lambda[i] * params.c2_arrival[i]);
    for (int k = 0; k < 2; ++k)
      c.sigma_S[i][k] = std::sqrt(params.mu[i][k] * params.c2_service[i][k]);
  }
  return c;
}

NormalizedPair normalize(const WcpCoefficients& c) {
  bool swap;
  if (nearly_equal(c.b[0], c.b[1]))
    swap = c.sigma[1] > c.sigma[0];
  else
    swap = c.b[1] > c.b[0];
  const int i1 = swap ? 1 : 0;
  const int i2 = other(i1);
  return {c.b[i1], c.sigma[i1], c.b[i2], c.sigma[i2], c.gamma, swap};
}

Exponents exponents(const NormalizedPair& n) {
  return {positive_exponent(n.b1, n.sigma1, n.gamma),
          positive_exponent(n.b2, n.sigma2, n.gamma),
          negative_exponent(n.b1, n.sigma1, n.gamma)};
}

ModeCase classify_mode_case(const WcpCoefficients& c) {
  const NormalizedPair n = normalize(c);
  const int idx1 = n.swapped ? 1 : 0;
  const int idx2 = other(idx1);
  ModeCase mc;
  // After normalization b1 >= b2, so the only candidate for the dominating
  // mode is index 2.
  if (nearly_equal(n.b1, n.b2) || n.sigma2 <= n.sigma1 || nearly_equal(n.sigma1, n.sigma2)) {
    mc.kind = ModeCase::Kind::Single;
    mc.active = idx2;
    mc.low = mc.high = idx2;
  } else {
    mc.kind = ModeCase::Kind::Dual;
    mc.low = idx1;
    mc.high = idx2;
    mc.active = idx2;
  }
  return mc;
}

double value_single(double x, const WcpCoefficients& c) {
  if (x < 0.0) throw std::invalid_argument("value_single: negative state");
  const NormalizedPair n = normalize(c);
  const double rho = positive_exponent(n.b2, n.sigma2, n.gamma);
  const double g = n.gamma;
  return x / g + n.b2 / (g * g) + std::exp(-rho * x) / (g * rho);
}

double cost_dual(double x, double z, const WcpCoefficients& c) {
  if (x < 0.0) throw std::invalid_argument("cost_dual: negative state");
  if (!(z > 0.0)) throw std::invalid_argument("cost_dual: switching point must be > 0");
  const NormalizedPair n = normalize(c);
  return dual_value(n, exponents(n), x, z);
}

double smooth_fit_residual(double z, const WcpCoefficients& c) {
  const NormalizedPair n = normalize(c);
  return dual_residual(n, exponents(n), z);
}

HjbClosedForm solve_zstar(const WcpCoefficients& c) {
  HjbClosedForm out;
  out.coeffs = c;
  out.mode_case = classify_mode_case(c);
  const NormalizedPair n = normalize(c);
  if (!(n.b1 > n.b2))
    throw std::invalid_argument("solve_zstar: requires b1 > b2 after normalization");
  const Exponents e = exponents(n);
  out.beta_r = e.beta;
  out.rho_r = e.rho;
  out.nu_r = e.nu;
  if (std::abs(n.b1 - n.b2 - n.gamma) < 1e-8) {
    // V(a z; a b, a sigma) = a V(z; b, sigma): the switching point of the
    // scaled problem is a z*.
    constexpr double a = 2.0;
    NormalizedPair scaled = n;
    scaled.b1 *= a;
    scaled.b2 *= a;
    scaled.sigma1 *= a;
    scaled.sigma2 *= a;
    out.zstar = bisect_zstar(scaled) / a;
  } else {
    out.zstar = bisect_zstar(n);
  }
  out.value_at_zero = dual_value(n, e, 0.0, *out.zstar);
  return out;
}

HjbClosedForm solve_hjb(const WcpCoefficients& c) {
  const ModeCase mc = classify_mode_case(c);
  if (mc.kind == ModeCase::Kind::Dual) return solve_zstar(c);
  HjbClosedForm out;
  out.coeffs = c;
  out.mode_case = mc;
  const NormalizedPair n = normalize(c);
  const Exponents e = exponents(n);
  out.beta_r = e.beta;
  out.rho_r = e.rho;
  out.nu_r = e.nu;
  out.value_at_zero = value_single(0.0, c);
  return out;
}

double HjbClosedForm::value(double x) const {
  if (zstar) return cost_dual(x, *zstar, coeffs);
  return value_single(x, coeffs);
}

double value_wcp(double x, const HjbClosedForm& hjb) { return hjb.value(x); }

double v0(const SystemParams& params, const LpStructure& lp, const HjbClosedForm& hjb) {
  return params.h[lp.q] * lp.product_form.alpha[lp.q] * hjb.value(0.0);
}

double hjb_residual(const HjbClosedForm& hjb, double x, double h) {
  const double up = hjb.value(x + h), mid = hjb.value(x), dn = hjb.value(x - h);
  const double d1 = (up - dn) / (2.0 * h);
  const double d2 = (up - 2.0 * mid + dn) / (h * h);
  const auto& c = hjb.coeffs;
  double hmin = c.b[0] * d1 + 0.5 * c.sigma[0] * c.sigma[0] * d2;
  hmin = std::min(hmin, c.b[1] * d1 + 0.5 * c.sigma[1] * c.sigma[1] * d2);
  return hmin + x - c.gamma * mid;
}

SymmetryReport symmetry_check(const SystemParams& params, const LpStructure& lp) {
  const auto& a = lp.product_form.alpha;
  const auto& be = lp.product_form.beta;
  const auto& mh = params.mu_hat;
  auto same = [](double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
  };
  SymmetryReport r;
  r.sy1 = same(mh[0][0] / a[0], mh[1][0] / a[1]) && same(mh[0][1] / a[0], mh[1][1] / a[1]);
  r.sy2 = same(mh[0][0] / be[0], mh[0][1] / be[1]) && same(mh[1][0] / be[0], mh[1][1] / be[1]);
  r.sy3 = same(params.c2_service[0][0], params.c2_service[0][1]) &&
          same(params.c2_service[1][0], params.c2_service[1][1]);
  const WcpCoefficients c = wcp_coefficients(params, lp);
  r.b_gap = std::abs(c.b[0] - c.b[1]);
  r.sigma_gap = std::abs(c.sigma[0] - c.sigma[1]);
  r.drift_equal = r.b_gap < 1e-10;
  r.sigma_equal = r.sigma_gap < 1e-10;
  r.single_mode = classify_mode_case(c).is_single();
  return r;
}

}  // namespace hts
