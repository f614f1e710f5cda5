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

#include "hts/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace hts {

const char* to_string(Refusal r) {
  switch (r) {
    case Refusal::NotProductForm: return "NotProductForm";
    case Refusal::BoundaryCase: return "BoundaryCase";
    case Refusal::DegenerateMode: return "DegenerateMode";
    case Refusal::NotCritical: return "NotCritical";
    case Refusal::Nondegeneracy: return "Nondegeneracy";
    case Refusal::NoBracket: return "NoBracket";
    case Refusal::TailBoundExceeded: return "TailBoundExceeded";
    case Refusal::PolicyCaseMismatch: return "PolicyCaseMismatch";
    case Refusal::NonpositiveRate: return "NonpositiveRate";
    case Refusal::InternalError: return "InternalError";
  }
  return "Unknown";
}

const char* to_string(Switching s) {
  return s == Switching::ClassSwitched ? "ClassSwitched" : "ServerSwitched";
}

namespace {

double max_entry(const Vec2& lambda, const Mat2& mu) {
  double s = std::max(lambda[0], lambda[1]);
  for (const auto& row : mu) s = std::max({s, row[0], row[1]});
  return s;
}

void require_positive(double v, const char* path) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "must be finite and > 0, got " << v;
    throw ConfigError(path, os.str());
  }
}

}  // namespace

void SystemParams::validate() const {
  static const char* lam[] = {"/system/lambda/0", "/system/lambda/1"};
  static const char* hs[] = {"/system/h/0", "/system/h/1"};
  static const char* ca[] = {"/system/c2_arrival/0", "/system/c2_arrival/1"};
  static const char* mus[2][2] = {{"/system/mu/0/0", "/system/mu/0/1"},
                                  {"/system/mu/1/0", "/system/mu/1/1"}};
  static const char* cs[2][2] = {
      {"/system/c2_service/0/0", "/system/c2_service/0/1"},
      {"/system/c2_service/1/0", "/system/c2_service/1/1"}};
  for (int i = 0; i < 2; ++i) {
    require_positive(lambda[i], lam[i]);
    require_positive(h[i], hs[i]);
    require_positive(c2_arrival[i], ca[i]);
    if (!std::isfinite(lambda_hat[i]))
      throw ConfigError("/system/lambda_hat", "must be finite");
    for (int k = 0; k < 2; ++k) {
      require_positive(mu[i][k], mus[i][k]);
      require_positive(c2_service[i][k], cs[i][k]);
      if (!std::isfinite(mu_hat[i][k]))
        throw ConfigError("/system/mu_hat", "must be finite");
    }
  }
  require_positive(gamma, "/system/gamma");
}

LpSolution solve_lp_bruteforce(const Vec2& lambda, const Mat2& mu) {
  // Variables v = (xi11, xi12, xi21, xi22, rho); the LP is invariant under a
  // common rescaling of lambda and mu, so work on unit-max data.
  const double s = max_entry(lambda, mu);
  Eigen::Matrix<double, 8, 5> a = Eigen::Matrix<double, 8, 5>::Zero();
  Eigen::Matrix<double, 8, 1> rhs = Eigen::Matrix<double, 8, 1>::Zero();
  // Equalities: sum_k mu_ik xi_ik = lambda_i.
  a(0, 0) = mu[0][0] / s;
  a(0, 1) = mu[0][1] / s;
  rhs(0) = lambda[0] / s;
  a(1, 2) = mu[1][0] / s;
  a(1, 3) = mu[1][1] / s;
  rhs(1) = lambda[1] / s;
  // Capacity: sum_i xi_ik - rho <= 0.
  a(2, 0) = 1.0;
  a(2, 2) = 1.0;
  a(2, 4) = -1.0;
  a(3, 1) = 1.0;
  a(3, 3) = 1.0;
  a(3, 4) = -1.0;
  // Nonnegativity: -xi_j <= 0.
  for (int j = 0; j < 4; ++j) a(4 + j, j) = -1.0;

  auto feasible = [&](const Eigen::Matrix<double, 5, 1>& v) {
    for (int r = 0; r < 2; ++r)
      if (std::abs(a.row(r).dot(v) - rhs(r)) > kStructTol) return false;
    for (int r = 2; r < 8; ++r)
      if (a.row(r).dot(v) - rhs(r) > kStructTol) return false;
    return true;
  };

  std::vector<Eigen::Matrix<double, 5, 1>> points;
  // Equalities are active at every feasible point, so a basis picks three of
  // the six inequality rows.
  for (int r1 = 2; r1 < 8; ++r1)
    for (int r2 = r1 + 1; r2 < 8; ++r2)
      for (int r3 = r2 + 1; r3 < 8; ++r3) {
        Eigen::Matrix<double, 5, 5> m;
        Eigen::Matrix<double, 5, 1> b;
        const int rows[5] = {0, 1, r1, r2, r3};
        for (int j = 0; j < 5; ++j) {
          m.row(j) = a.row(rows[j]);
          b(j) = rhs(rows[j]);
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(m);
        if (lu.rank() < 5) continue;
        Eigen::Matrix<double, 5, 1> v = lu.solve(b);
        if (feasible(v)) points.push_back(v);
      }
  if (points.empty())
    throw MathError(Refusal::InternalError, "LP has no basic feasible point");

  LpSolution out;
  out.rho_star = std::numeric_limits<double>::infinity();
  for (const auto& v : points) out.rho_star = std::min(out.rho_star, v(4));
  for (const auto& v : points) {
    if (v(4) > out.rho_star + kStructTol) continue;
    Mat2 xi{{{v(0), v(1)}, {v(2), v(3)}}};
    bool seen = false;
    for (const auto& w : out.vertices) {
      double d = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) d = std::max(d, std::abs(w[i][k] - xi[i][k]));
      if (d <= 1e-9) {
        seen = true;
        break;
      }
    }
    if (!seen) out.vertices.push_back(xi);
  }
  return out;
}

std::optional<ProductForm> factor_product_form(const Mat2& mu) {
  const double s = std::max({mu[0][0], mu[0][1], mu[1][0], mu[1][1]});
  const double det = (mu[0][0] * mu[1][1] - mu[0][1] * mu[1][0]) / (s * s);
  if (std::abs(det) > kStructTol) return std::nullopt;
  ProductForm pf;
  const double row = mu[0][0] + mu[0][1];
  pf.beta = {mu[0][0] / row, mu[0][1] / row};
  pf.beta[1] = 1.0 - pf.beta[0];
  pf.alpha = {mu[0][0] / pf.beta[0], mu[1][0] / pf.beta[0]};
  return pf;
}

bool check_ehtc(const Vec2& lambda, const ProductForm& pf) {
  const double load = lambda[0] / pf.alpha[0] + lambda[1] / pf.alpha[1];
  return std::abs(load - 1.0) <= kStructTol;
}

bool check_nondegeneracy(const Vec2& lambda, const Mat2& mu) {
  const double s = max_entry(lambda, mu);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      if (std::abs(lambda[i] - mu[i][k]) / s <= kStructTol) return false;
  return true;
}

Mode make_mode(const Mat2& raw) {
  Mode m;
  m.xi = raw;
  int zeros = 0;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      double& e = m.xi[i][k];
      if (e < -kStructTol || e > 1.0 + kStructTol)
        throw MathError(Refusal::InternalError, "mode entry outside [0,1]");
      if (std::abs(e) <= kStructTol) e = 0.0;
      if (std::abs(e - 1.0) <= kStructTol) e = 1.0;
    }
    if (std::abs(m.xi[0][k] + m.xi[1][k] - 1.0) > kStructTol)
      throw MathError(Refusal::InternalError, "mode is not column-stochastic");
    // Keep columns exactly stochastic after snapping.
    m.xi[1][k] = 1.0 - m.xi[0][k];
    for (int i = 0; i < 2; ++i)
      if (m.xi[i][k] == 0.0) {
        ++zeros;
        m.nonbasic = {i, k};
      }
  }
  if (zeros != 1)
    throw MathError(Refusal::DegenerateMode,
                    zeros == 0 ? "mode has no zero entry"
                               : "mode has more than one non-basic activity");
  m.i1 = m.nonbasic.cls;
  m.i2 = other(m.i1);
  m.k1 = m.nonbasic.server;
  m.k2 = other(m.k1);
  return m;
}

Mat2 solution_from_entry(const Vec2& lambda, const ProductForm& pf, double xi11) {
  const auto& a = pf.alpha;
  const auto& b = pf.beta;
  const double xi12 = lambda[0] / (a[0] * b[1]) - (b[0] / b[1]) * xi11;
  return Mat2{{{xi11, xi12}, {1.0 - xi11, 1.0 - xi12}}};
}

std::pair<Mode, Mode> compute_modes(const Vec2& lambda, const ProductForm& pf) {
  const auto& a = pf.alpha;
  const auto& b = pf.beta;
  const double r = lambda[0] / (a[0] * b[0]);
  const double lo = std::max(0.0, r - b[1] / b[0]);
  const double hi = std::min(r, 1.0);
  return {make_mode(solution_from_entry(lambda, pf, lo)),
          make_mode(solution_from_entry(lambda, pf, hi))};
}

Switching classify_switching(const Vec2& lambda, const ProductForm& pf) {
  const double load = std::max(lambda[0] / pf.alpha[0], lambda[1] / pf.alpha[1]);
  const double speed = std::max(pf.beta[0], pf.beta[1]);
  if (std::abs(load - speed) <= kStructTol) {
    std::ostringstream os;
    os << "max lambda/alpha = " << load << " equals max beta = " << speed;
    throw MathError(Refusal::BoundaryCase, os.str());
  }
  return load < speed ? Switching::ClassSwitched : Switching::ServerSwitched;
}

Switching switching_from_modes(const Mode& a, const Mode& b) {
  const bool same_col = a.nonbasic.server == b.nonbasic.server;
  const bool same_row = a.nonbasic.cls == b.nonbasic.cls;
  if (same_col == same_row)
    throw MathError(Refusal::InternalError,
                    "modes are neither class- nor server-switched");
  return same_col ? Switching::ClassSwitched : Switching::ServerSwitched;
}

std::pair<int, int> priority_classes(const Vec2& h, const ProductForm& pf) {
  const double w0 = h[0] * pf.alpha[0];
  const double w1 = h[1] * pf.alpha[1];
  // Ties (after tolerance rounding) resolve to p = class 1.
  if (std::abs(w0 - w1) <= kStructTol * std::max(w0, w1) || w0 > w1) return {0, 1};
  return {1, 0};
}

Relabeling canonical_relabeling(const Mode& mode) {
  // Canonical form has first column (1,0)^T, so the non-basic activity must
  // land on (class 2, server 1).
  Relabeling r;
  r.server_perm = {mode.nonbasic.server, other(mode.nonbasic.server)};
  r.class_perm = {other(mode.nonbasic.cls), mode.nonbasic.cls};
  return r;
}

Mat2 apply_relabeling(const Mat2& xi, const Relabeling& r) {
  Mat2 out{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out[a][b] = xi[r.class_perm[a]][r.server_perm[b]];
  return out;
}

Vec2 apply_class_perm(const Vec2& v, const Relabeling& r) {
  return {v[r.class_perm[0]], v[r.class_perm[1]]};
}

Vec2 apply_server_perm(const Vec2& v, const Relabeling& r) {
  return {v[r.server_perm[0]], v[r.server_perm[1]]};
}

LpStructure analyze_lp(const SystemParams& params) {
  params.validate();
  auto pf = factor_product_form(params.mu);
  if (!pf)
    throw MathError(Refusal::NotProductForm,
                    "service rates are not of product form; the LP solution is "
                    "unique and the instance is outside the supported regime");
  if (!check_ehtc(params.lambda, *pf)) {
    std::ostringstream os;
    os << "sum lambda_i/alpha_i = "
       << params.lambda[0] / pf->alpha[0] + params.lambda[1] / pf->alpha[1]
       << " != 1";
    throw MathError(Refusal::NotCritical, os.str());
  }
  if (!check_nondegeneracy(params.lambda, params.mu))
    throw MathError(Refusal::DegenerateMode,
                    "lambda_i equals mu_ik for some activity");
  LpStructure lp;
  lp.rho_star = params.lambda[0] / pf->alpha[0] + params.lambda[1] / pf->alpha[1];
  lp.product_form = *pf;
  std::tie(lp.mode1, lp.mode2) = compute_modes(params.lambda, *pf);
  lp.switching = classify_switching(params.lambda, *pf);
  if (switching_from_modes(lp.mode1, lp.mode2) != lp.switching)
    throw MathError(Refusal::InternalError,
                    "switching condition disagrees with mode geometry");
  std::tie(lp.p, lp.q) = priority_classes(params.h, *pf);
  return lp;
}

}  // namespace hts
