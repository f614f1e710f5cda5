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

// Static allocation LP of the 2-class / 2-server parallel server system:
// brute-force vertex oracle, product-form factoring, extreme modes and
// their structural classification.

#include <optional>
#include <utility>
#include <vector>

#include "hts/common.hpp"

namespace hts {

/// Full problem data of the queueing control problem.
struct SystemParams {
  Vec2 lambda{};      // first-order arrival rates
  Mat2 mu{};          // first-order service rates mu[i][k]
  Vec2 lambda_hat{};  // second-order arrival perturbations
  Mat2 mu_hat{};      // second-order service perturbations
  Vec2 c2_arrival{1.0, 1.0};
  Mat2 c2_service{{{1.0, 1.0}, {1.0, 1.0}}};
  double gamma = 1.0;
  Vec2 h{1.0, 1.0};

  /// Throws ConfigError naming the first violated positivity constraint.
  void validate() const;

  bool operator==(const SystemParams&) const = default;
};

/// mu[i][k] = alpha[i] * beta[k] with beta[0] + beta[1] = 1.
struct ProductForm {
  Vec2 alpha{};
  Vec2 beta{};
  bool operator==(const ProductForm&) const = default;
};

struct Activity {
  int cls = 0;
  int server = 0;
  bool operator==(const Activity&) const = default;
};

/// A nondegenerate extreme point of the LP solution set. The class whose
/// activity is non-basic has a single basic activity (i1); likewise the
/// server (k1).
struct Mode {
  Mat2 xi{};
  Activity nonbasic{};
  int i1 = 0, i2 = 1;
  int k1 = 0, k2 = 1;

  bool operator==(const Mode&) const = default;
};

enum class Switching { ClassSwitched, ServerSwitched };

struct LpStructure {
  double rho_star = 1.0;
  ProductForm product_form{};
  Mode mode1{}, mode2{};
  Switching switching = Switching::ClassSwitched;
  int p = 0, q = 1;  // high / low priority class

  const Mode& mode(int m) const { return m == 0 ? mode1 : mode2; }
  bool operator==(const LpStructure&) const = default;
};

struct LpSolution {
  double rho_star = 0.0;
  std::vector<Mat2> vertices;  // distinct optimal basic feasible points
};

/// Optimal value and all optimal vertices of the LP, by enumeration of the
/// basic feasible points of the (xi, rho) system. Independent of every
/// closed-form routine below.
LpSolution solve_lp_bruteforce(const Vec2& lambda, const Mat2& mu);

/// Factoring with column 1 as reference; nullopt when the normalized
/// determinant test fails.
std::optional<ProductForm> factor_product_form(const Mat2& mu);

/// Sum_i lambda_i / alpha_i == 1 within tolerance.
bool check_ehtc(const Vec2& lambda, const ProductForm& pf);

/// lambda_i != mu_ik for all four pairs (normalized tolerance guard).
bool check_nondegeneracy(const Vec2& lambda, const Mat2& mu);

/// Builds a mode from a column-stochastic matrix with exactly one zero
/// entry. Throws MathError(DegenerateMode) otherwise.
Mode make_mode(const Mat2& xi);

/// The two extreme modes, mode 1 minimizing xi_11 and mode 2 maximizing it.
std::pair<Mode, Mode> compute_modes(const Vec2& lambda, const ProductForm& pf);

/// Any point of the LP solution set as a function of its (1,1) entry.
Mat2 solution_from_entry(const Vec2& lambda, const ProductForm& pf, double xi11);

/// Classification by comparing max lambda/alpha against max beta. Throws
/// MathError(BoundaryCase) when the two are equal within tolerance.
Switching classify_switching(const Vec2& lambda, const ProductForm& pf);

/// Geometric classification from the modes' non-basic activities.
Switching switching_from_modes(const Mode& a, const Mode& b);

/// (p, q) with h_p alpha_p >= h_q alpha_q; ties go to p = class 1.
std::pair<int, int> priority_classes(const Vec2& h, const ProductForm& pf);

/// Relabeling new index -> old index. Applying it to a mode yields
/// relabeled[a][b] = xi[class_perm[a]][server_perm[b]].
struct Relabeling {
  std::array<int, 2> class_perm{0, 1};
  std::array<int, 2> server_perm{0, 1};
  bool operator==(const Relabeling&) const = default;
};

Relabeling canonical_relabeling(const Mode& mode);
Mat2 apply_relabeling(const Mat2& xi, const Relabeling& r);
Vec2 apply_class_perm(const Vec2& v, const Relabeling& r);
Vec2 apply_server_perm(const Vec2& v, const Relabeling& r);

/// Whole pipeline: product form, EHTC, nondegeneracy, modes, switching type,
/// priority classes. Every refusal is a typed MathError.
LpStructure analyze_lp(const SystemParams& params);

const char* to_string(Switching s);

}  // namespace hts
