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

// Mean-one renewal distributions with a prescribed squared coefficient of
// variation. Samplers are written out by inverse transform so that streams
// are identical across standard libraries.

#include <cmath>
#include <limits>
#include <string>

#include "hts/common.hpp"
#include "hts/rng.hpp"

namespace hts {

struct DistributionSpec {
  enum class Family { Exponential, Erlang, Hyperexp2Balanced, Lognormal, Pareto };
  Family family = Family::Exponential;
  int k = 1;           // Erlang phases
  double c2 = 1.0;     // Hyperexp2Balanced (>= 1), Lognormal (> 0)
  double shape = 0.0;  // Pareto (> 2)

  static DistributionSpec exponential() { return {}; }
  static DistributionSpec erlang(int k);
  static DistributionSpec hyperexp2(double c2);
  static DistributionSpec lognormal(double c2);
  static DistributionSpec pareto(double shape);

  /// Closed-form squared coefficient of variation.
  double scv() const;
  /// Supremum of finite moment orders (infinity except for Pareto).
  double moment_order() const;
  /// Throws ConfigError(path) on invalid parameters.
  void validate(const std::string& path) const;

  bool operator==(const DistributionSpec&) const = default;
};

const char* to_string(DistributionSpec::Family f);

/// Default family for a given SCV: exponential at 1, balanced
/// hyperexponential above 1, Erlang when 1/c2 is an integer, otherwise
/// lognormal.
DistributionSpec default_distribution(double c2);

/// Phase probabilities and rates of the balanced two-phase hyperexponential.
struct Hyperexp2Params {
  double p1, p2, rate1, rate2;
};
Hyperexp2Params hyperexp2_params(double c2);

class MeanOneSampler {
 public:
  explicit MeanOneSampler(const DistributionSpec& spec);

  double operator()(PhiloxStream& rng) const {
    switch (spec_.family) {
      case DistributionSpec::Family::Exponential:
        return -std::log(rng.next_uniform());
      case DistributionSpec::Family::Erlang: {
        double s = 0.0;
        for (int j = 0; j < spec_.k; ++j) s -= std::log(rng.next_uniform());
        return s / spec_.k;
      }
      case DistributionSpec::Family::Hyperexp2Balanced: {
        const double u = rng.next_uniform();
        const double e = -std::log(rng.next_uniform());
        return u < hx_.p1 ? e / hx_.rate1 : e / hx_.rate2;
      }
      case DistributionSpec::Family::Lognormal:
        return std::exp(ln_mu_ + ln_s_ * rng.next_normal());
      case DistributionSpec::Family::Pareto:
        return xm_ * std::pow(rng.next_uniform(), -1.0 / spec_.shape);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  const DistributionSpec& spec() const { return spec_; }

 private:
  DistributionSpec spec_;
  Hyperexp2Params hx_{};
  double ln_mu_ = 0.0, ln_s_ = 0.0;
  double xm_ = 0.0;
};

}  // namespace hts
