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

// Monte Carlo for one-dimensional reflected diffusions: the reflecting
// Brownian motion of a single mode and the switched SDE whose coefficients
// jump at z*. Also the discrete Skorokhod map.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hts/wcp.hpp"

namespace hts {

/// Projection: z <- max(0, z + dx), the boundary term absorbs the deficit.
/// BridgeCorrected: the reflected value is drawn exactly from the Brownian
/// bridge minimum over the step, which removes the O(sqrt(dt)) boundary
/// bias of projection. For the switched SDE, steps whose bridge touches z*
/// end on either side with the skew Brownian motion probabilities, which
/// removes the same order of bias at the coefficient jump. Bridge steps that
/// can reach 0 or z* draw extra uniforms, so the two schemes share normals
/// only until the first such step.
enum class Reflection { Projection, BridgeCorrected };

struct DiffusionSpec {
  enum class Kind { Rbm, Switched };
  Kind kind = Kind::Rbm;
  double b = 0.0, sigma = 1.0;  // Rbm
  double b_low = 0.0, sigma_low = 1.0, b_high = 0.0, sigma_high = 1.0, zstar = 1.0;
  double z0 = 0.0;
  double dt = 1e-3;
  double horizon = 40.0;
  double gamma = 1.0;
  Reflection reflection = Reflection::Projection;

  /// Throws ConfigError on nonpositive dt, horizon, gamma, sigma or zstar.
  void validate() const;
  std::size_t steps() const;
  bool operator==(const DiffusionSpec&) const = default;
};

/// RBM with the single-case active mode, or the switched SDE with the
/// low/high modes and z* of the dual case. Horizon 40/gamma.
DiffusionSpec spec_from_hjb(const HjbClosedForm& hjb, double dt = 1e-3);

struct ReflectedPath {
  double dt = 0.0;
  std::vector<double> z;  // z[j] = Z(j dt)
  std::vector<double> l;  // boundary term, l[0] = 0

  double time(std::size_t j) const { return static_cast<double>(j) * dt; }
};

struct SkorokhodResult {
  std::vector<double> phi;
  std::vector<double> eta;
};

/// eta(j) = max_{i<=j} max(0, -psi(i)), phi = psi + eta.
SkorokhodResult skorokhod_map(const std::vector<double>& psi);

/// One path; path_index selects the random stream so paths can be
/// generated in any order.
ReflectedPath simulate(const DiffusionSpec& spec, std::uint64_t seed,
                       std::uint64_t path_index = 0);

struct CostEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;  // max path value * e^{-gamma T} / gamma
  std::size_t paths = 0;
};

/// Trapezoidal integral of e^{-gamma t} Z_t over the grid.
double path_discounted_cost(const ReflectedPath& path, double gamma);

/// Throws MathError(TailBoundExceeded) when the tail bound exceeds tail_tol.
CostEstimate discounted_cost(const std::vector<ReflectedPath>& paths, double gamma,
                             double tail_tol = 1e-6);

/// Same estimate without storing paths: paths 0..n_paths-1 of `seed`,
/// computed on `threads` workers (0: default) and reduced in path order.
CostEstimate estimate_cost(const DiffusionSpec& spec, std::size_t n_paths,
                           std::uint64_t seed, unsigned threads = 0,
                           double tail_tol = 1e-6);

/// Z at the end of the horizon for paths 0..n_paths-1.
std::vector<double> terminal_samples(const DiffusionSpec& spec, std::size_t n_paths,
                                     std::uint64_t seed, unsigned threads = 0);

/// dt * #{j : |z_j - center| < eps}.
double occupation_near(const ReflectedPath& path, double center, double eps);

}  // namespace hts
