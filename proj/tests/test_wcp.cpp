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

#include <random>

#include "hts/wcp.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

using namespace hts;

namespace {

// random dual-case set with labels possibly swapped
WcpCoefficients random_dual(std::mt19937_64& g, double gmin = 0.3, double gmax = 3.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double b_lo = -1 + 2 * u(g), b_hi = b_lo - 0.1 - 2 * u(g);
  const double s_lo = 0.3 + u(g), s_hi = s_lo * (1.1 + 2 * u(g));
  const double gamma = gmin + (gmax - gmin) * u(g);
  if (u(g) < 0.5) return WcpCoefficients::from_modes({b_hi, b_lo}, {s_hi, s_lo}, gamma);
  return WcpCoefficients::from_modes({b_lo, b_hi}, {s_lo, s_hi}, gamma);
}

}  // namespace

TEST_CASE("mode case classification") {
  auto c = classify_mode_case(WcpCoefficients::from_modes({1, 0}, {2, 1}, 1));
  CHECK(c.is_single());
  CHECK(c.active == 1);
  c = classify_mode_case(WcpCoefficients::from_modes({1, 0}, {1, 2}, 1));
  CHECK_FALSE(c.is_single());
  CHECK(c.low == 0);
  CHECK(c.high == 1);
  CHECK(classify_mode_case(WcpCoefficients::from_modes({0, 0}, {1, 1}, 1)).is_single());
}

TEST_CASE("drift and diffusivity") {
  SystemParams p = scenarios::ss_reference();
  p.lambda_hat = {0, 0};
  p.mu_hat = {};
  p.c2_service = {{{1, 1}, {1, 1}}};
  const auto lp = analyze_lp(p);
  for (int m = 0; m < 2; ++m) {
    const auto dd = drift_diffusion(p, lp.product_form, lp.mode(m).xi);
    CHECK(dd.b == doctest::Approx(0.0));
    CHECK(dd.sigma2 == doctest::Approx(0.7).epsilon(1e-12));
  }
  // affine along the segment
  const auto q = scenarios::ss_reference();
  const auto lq = analyze_lp(q);
  Mat2 mid{};
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) mid[i][k] = 0.5 * (lq.mode1.xi[i][k] + lq.mode2.xi[i][k]);
  const auto a = drift_diffusion(q, lq.product_form, lq.mode1.xi);
  const auto b = drift_diffusion(q, lq.product_form, lq.mode2.xi);
  const auto m = drift_diffusion(q, lq.product_form, mid);
  CHECK(m.b == doctest::Approx(0.5 * (a.b + b.b)).epsilon(1e-12));
  CHECK(m.sigma2 == doctest::Approx(0.5 * (a.sigma2 + b.sigma2)).epsilon(1e-12));
}

TEST_CASE("hamiltonian over the segment is attained at a mode") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto p = scenarios::ss_reference();
  const auto lp = analyze_lp(p);
  const auto c = wcp_coefficients(p, lp);
  for (int t = 0; t < 50; ++t) {
    const double v1 = u(g), v2 = u(g);
    const double at_modes = std::min(c.b[0] * v1 + 0.5 * c.sigma[0] * c.sigma[0] * v2,
                                     c.b[1] * v1 + 0.5 * c.sigma[1] * c.sigma[1] * v2);
    double seg = 1e300;
    for (int j = 0; j <= 100; ++j) {
      const double x11 = lp.mode1.xi[0][0] + (lp.mode2.xi[0][0] - lp.mode1.xi[0][0]) * j / 100.0;
      const auto dd = drift_diffusion(p, lp.product_form,
                                      solution_from_entry(p.lambda, lp.product_form, x11));
      seg = std::min(seg, dd.b * v1 + 0.5 * dd.sigma2 * v2);
    }
    CHECK(std::abs(seg - at_modes) < 1e-12);
  }
}

TEST_CASE("single-mode value") {
  const auto c = WcpCoefficients::from_modes({1, 0}, {3, std::sqrt(2.0)}, 1.0);
  const auto hjb = solve_hjb(c);
  REQUIRE(hjb.mode_case.is_single());
  CHECK(hjb.rho_r == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(value_single(0.0, c) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(value_single(60.0, c) - 60.0 == doctest::Approx(0.0).epsilon(1e-12));
  const double h = 1e-5;
  CHECK(std::abs(value_single(h, c) - value_single(0.0, c)) / h < 1e-5);
  CHECK(hjb.value(2.0) == value_single(2.0, c));

  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double b = u(g) - 0.5, s = 0.2 + u(g), gamma = 0.2 + 3 * u(g);
    const auto cc = WcpCoefficients::from_modes({b + 0.5, b}, {s + 0.5, s}, gamma);
    for (double x : {0.0, 0.3, 1.0, 4.0})
      CHECK(value_single(x, cc) == doctest::Approx(oracle::rbm_cost(x, b, s, gamma)).epsilon(1e-12));
  }
}

TEST_CASE("dual cost matches the linear-system oracle") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_dual(g);
    const auto mc = classify_mode_case(c);
    REQUIRE_FALSE(mc.is_single());
    const double bl = c.b[mc.low], sl = c.sigma[mc.low], bh = c.b[mc.high], sh = c.sigma[mc.high];
    const double z = 0.05 + 3 * u(g);
    for (double x : {0.0, 0.5 * z, z, 1.5 * z, z + 2.0}) {
      const double want = oracle::switched_cost(x, z, bl, sl, bh, sh, c.gamma);
      CHECK(cost_dual(x, z, c) == doctest::Approx(want).epsilon(1e-10));
    }
    // both branches agree at x = z
    CHECK(cost_dual(z * (1 - 1e-12), z, c) == doctest::Approx(cost_dual(z, z, c)).epsilon(1e-10));
    CHECK(cost_dual(z * (1 + 1e-12), z, c) == doctest::Approx(cost_dual(z, z, c)).epsilon(1e-10));
  }
}

TEST_CASE("dual cost limits in z") {
  std::mt19937_64 g(9);
  for (int t = 0; t < 30; ++t) {
    const auto c = random_dual(g);
    const auto mc = classify_mode_case(c);
    const double bl = c.b[mc.low], sl = c.sigma[mc.low], bh = c.b[mc.high], sh = c.sigma[mc.high];
    for (double x : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      CHECK(std::abs(cost_dual(x, 1e-5, c) - oracle::rbm_cost(x, bh, sh, c.gamma)) < 1e-4);
      CHECK(std::abs(cost_dual(x, 200.0, c) - oracle::rbm_cost(x, bl, sl, c.gamma)) < 1e-6);
    }
  }
}

TEST_CASE("switching point") {
  std::mt19937_64 g(10);
  for (int t = 0; t < 50; ++t) {
    const auto c = random_dual(g);
    const auto hjb = solve_hjb(c);
    REQUIRE(hjb.zstar);
    const double zs = *hjb.zstar;
    CHECK(zs > 0.0);
    CHECK(std::abs(smooth_fit_residual(zs, c)) < 1e-10);
    // one sign change between z*/100 and 100 z*
    int changes = 0, sign = 0;
    for (int j = 0; j <= 200; ++j) {
      const double r = smooth_fit_residual(zs / 100 * std::pow(1e4, j / 200.0), c);
      if (std::abs(r) < 1e-12) continue;  // the grid passes through z* itself
      const int s = r > 0 ? 1 : -1;
      if (sign != 0 && s != sign) ++changes;
      sign = s;
    }
    CHECK(changes == 1);
    const double j0 = cost_dual(0.0, zs, c);
    CHECK(hjb.value_at_zero == doctest::Approx(j0).epsilon(1e-14));
    for (int j = 0; j < 40; ++j)
      CHECK(cost_dual(0.0, zs / 100 * std::pow(1e4, j / 39.0), c) >= j0 - 1e-9);
    for (int j = 1; j <= 50; ++j) CHECK(std::abs(hjb_residual(hjb, 0.1 * j, 1e-4)) < 1e-4);
  }
}

TEST_CASE("switching point under label swap and scaling") {
  std::mt19937_64 g(12);
  for (int t = 0; t < 30; ++t) {
    const auto c = random_dual(g);
    const auto s = WcpCoefficients::from_modes({c.b[1], c.b[0]}, {c.sigma[1], c.sigma[0]}, c.gamma);
    const auto h1 = solve_hjb(c), h2 = solve_hjb(s);
    CHECK(*h1.zstar == doctest::Approx(*h2.zstar).epsilon(1e-12));
    CHECK(h1.mode_case.low == h2.mode_case.high);
    CHECK(h1.mode_case.high == h2.mode_case.low);
    const auto d = WcpCoefficients::from_modes({2 * c.b[0], 2 * c.b[1]},
                                               {2 * c.sigma[0], 2 * c.sigma[1]}, c.gamma);
    CHECK(*solve_hjb(d).zstar == doctest::Approx(2 * *h1.zstar).epsilon(1e-8));
  }
}

TEST_CASE("drift gap equal to the discount rate") {
  for (double gamma : {0.5, 1.0, 2.0}) {
    const auto at = WcpCoefficients::from_modes({0.3, 0.3 - gamma}, {0.8, 1.6}, gamma);
    const auto near = WcpCoefficients::from_modes({0.3, 0.3 - gamma - 1e-6}, {0.8, 1.6}, gamma);
    const auto h = solve_hjb(at);
    REQUIRE(h.zstar);
    CHECK(std::isfinite(*h.zstar));
    CHECK(*h.zstar == doctest::Approx(*solve_hjb(near).zstar).epsilon(1e-4));
    CHECK(std::abs(smooth_fit_residual(*h.zstar, at)) < 1e-8);
  }
}

TEST_CASE("reference instances") {
  const auto ss = scenarios::ss_reference();
  const auto lp = analyze_lp(ss);
  const auto hjb = solve_hjb(wcp_coefficients(ss, lp));
  REQUIRE(hjb.zstar);
  // lower bound uses the low-priority class
  const int q = lp.q;
  CHECK(v0(ss, lp, hjb) ==
        doctest::Approx(ss.h[q] * lp.product_form.alpha[q] * hjb.value(0.0)).epsilon(1e-14));
  CHECK(value_wcp(0.0, hjb) == hjb.value(0.0));

  const auto cs = scenarios::cs_reference();
  const auto lc = analyze_lp(cs);
  CHECK(solve_hjb(wcp_coefficients(cs, lc)).mode_case.is_single());
}

TEST_CASE("symmetry conditions") {
  std::mt19937_64 g(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    SystemParams p = oracle::random_critical(g);
    p.lambda_hat = {u(g) - 0.5, u(g) - 0.5};
    const auto lp = analyze_lp(p);
    const Vec2 a = lp.product_form.alpha;
    auto c = wcp_coefficients(p, lp);
    CHECK(c.b[0] == doctest::Approx(p.lambda_hat[0] / a[0] + p.lambda_hat[1] / a[1]).epsilon(1e-12));
    CHECK(c.b[1] == doctest::Approx(c.b[0]).epsilon(1e-12));
    const auto r = symmetry_check(p, lp);
    CHECK(r.sy1);
    CHECK(r.sy2);

    const double v1 = u(g), v2 = u(g);
    p.mu_hat = {{{a[0] * v1, a[0] * v2}, {a[1] * v1, a[1] * v2}}};
    c = wcp_coefficients(p, lp);
    CHECK(std::abs(c.b[0] - c.b[1]) < 1e-12);

    p.c2_service = {{{1.5, 1.5}, {0.7, 0.7}}};
    c = wcp_coefficients(p, lp);
    CHECK(std::abs(c.sigma[0] - c.sigma[1]) < 1e-12);
    CHECK(symmetry_check(p, lp).sy3);
  }
}
