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

// Workload control problem: per-mode drift and diffusivity, single/dual
// mode classification, closed-form value function and the free-boundary
// switching point.

#include <optional>

#include "hts/lp.hpp"

namespace hts {

struct WcpCoefficients {
  Vec2 b{};      // drift of mode 1, mode 2
  Vec2 sigma{};  // diffusivity (not squared) of mode 1, mode 2
  Vec2 sigma_A{};
  Mat2 sigma_S{};
  double gamma = 1.0;

  /// Synthetic coefficient set with no primitive data attached.
  static WcpCoefficients from_modes(Vec2 b, Vec2 sigma, double gamma);
  bool operator==(const WcpCoefficients&) const = default;
};

/// Drift b(xi) and squared diffusivity sigma(xi)^2 for any xi in the LP
/// solution set. Both are affine in xi.
struct DriftDiffusion {
  double b = 0.0;
  double sigma2 = 0.0;
};
DriftDiffusion drift_diffusion(const SystemParams& params, const ProductForm& pf,
                               const Mat2& xi);

WcpCoefficients wcp_coefficients(const SystemParams& params, const LpStructure& lp);

/// Single: one mode dominates in drift and diffusivity, `active` is used
/// everywhere. Dual: `low` (larger drift, smaller diffusivity) below the
/// switching point, `high` above it. Indices are the caller's mode labels.
struct ModeCase {
  enum class Kind { Single, Dual };
  Kind kind = Kind::Single;
  int active = 0;
  int low = 0;
  int high = 1;

  bool is_single() const { return kind == Kind::Single; }
  bool operator==(const ModeCase&) const = default;
};

ModeCase classify_mode_case(const WcpCoefficients& c);

/// Mode pair relabeled so that b1 >= b2, with sigma1 >= sigma2 on drift ties.
/// Index 1 is the low-workload mode in the dual case and index 2 the active
/// mode in the single case.
struct NormalizedPair {
  double b1, sigma1, b2, sigma2, gamma;
  bool swapped;  // true when caller's mode 1 became index 2
};
NormalizedPair normalize(const WcpCoefficients& c);

/// Exponents of the homogeneous solutions: e^{-beta x}, e^{-nu x} for the
/// index-1 mode and e^{-rho x} for the index-2 mode.
struct Exponents {
  double beta, rho, nu;
};
Exponents exponents(const NormalizedPair& n);

/// Value under the index-2 mode used everywhere:
///   u(x) = x/gamma + b2/gamma^2 + exp(-rho x) / (gamma rho).
double value_single(double x, const WcpCoefficients& c);

/// Cost J(x, z) of using the index-1 mode on [0, z] and the index-2 mode on
/// (z, inf), from reflection at 0.
double cost_dual(double x, double z, const WcpCoefficients& c);

/// u''(z-) - u''(z+) for the cost of switching at z; its unique positive
/// root is the switching point.
double smooth_fit_residual(double z, const WcpCoefficients& c);

struct HjbClosedForm {
  ModeCase mode_case{};
  double beta_r = 0.0;
  double rho_r = 0.0;
  double nu_r = 0.0;
  std::optional<double> zstar;
  double value_at_zero = 0.0;  // V_WCP(0)
  WcpCoefficients coeffs{};

  /// V_WCP(x).
  double value(double x) const;
};

/// Switching point by bracketing and bisection. Throws MathError(NoBracket)
/// when no sign change is found up to z = 1e6. When b1 - b2 is within 1e-8
/// of gamma the problem is solved with (2b, 2sigma) and the root halved.
HjbClosedForm solve_zstar(const WcpCoefficients& c);

/// Classifies and solves; dispatches to the single or dual closed form.
HjbClosedForm solve_hjb(const WcpCoefficients& c);

double value_wcp(double x, const HjbClosedForm& hjb);

/// Lower bound h_q alpha_q V_WCP(0).
double v0(const SystemParams& params, const LpStructure& lp, const HjbClosedForm& hjb);

/// HJB residual min_m [b_m u' + sigma_m^2/2 u''] + x - gamma u, with central
/// differences of step h.
double hjb_residual(const HjbClosedForm& hjb, double x, double h);

struct SymmetryReport {
  bool sy1 = false;  // mu_hat_{1k}/alpha_1 == mu_hat_{2k}/alpha_2
  bool sy2 = false;  // mu_hat_{i1}/beta_1 == mu_hat_{i2}/beta_2
  bool sy3 = false;  // C_{S_i1} == C_{S_i2}
  double b_gap = 0.0;
  double sigma_gap = 0.0;
  bool drift_equal = false;
  bool sigma_equal = false;
  bool single_mode = false;
};

SymmetryReport symmetry_check(const SystemParams& params, const LpStructure& lp);

}  // namespace hts
