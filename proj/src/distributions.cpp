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

#include "hts/distributions.hpp"

namespace hts {

DistributionSpec DistributionSpec::erlang(int k) {
  DistributionSpec d;
  d.family = Family::Erlang;
  d.k = k;
  d.c2 = 1.0 / k;
  return d;
}

DistributionSpec DistributionSpec::hyperexp2(double c2) {
  DistributionSpec d;
  d.family = Family::Hyperexp2Balanced;
  d.c2 = c2;
  return d;
}

DistributionSpec DistributionSpec::lognormal(double c2) {
  DistributionSpec d;
  d.family = Family::Lognormal;
  d.c2 = c2;
  return d;
}

DistributionSpec DistributionSpec::pareto(double shape) {
  DistributionSpec d;
  d.family = Family::Pareto;
  d.shape = shape;
  d.c2 = shape > 2.0 ? 1.0 / (shape * (shape - 2.0)) : 0.0;
  return d;
}

double DistributionSpec::scv() const {
  switch (family) {
    case Family::Exponential:
      return 1.0;
    case Family::Erlang:
      return 1.0 / k;
    case Family::Hyperexp2Balanced: {
      // E X^2 = sum_j 2 p_j / r_j^2 with r_j = 2 p_j
      const auto h = hyperexp2_params(c2);
      return 2.0 * h.p1 / (h.rate1 * h.rate1) + 2.0 * h.p2 / (h.rate2 * h.rate2) - 1.0;
    }
    case Family::Lognormal:
      return c2;
    case Family::Pareto:
      return 1.0 / (shape * (shape - 2.0));
  }
  return 0.0;
}

double DistributionSpec::moment_order() const {
  return family == Family::Pareto ? shape : std::numeric_limits<double>::infinity();
}

void DistributionSpec::validate(const std::string& path) const {
  switch (family) {
    case Family::Exponential:
      break;
    case Family::Erlang:
      if (k < 1) throw ConfigError(path + "/k", "Erlang phase count must be >= 1");
      break;
    case Family::Hyperexp2Balanced:
      if (!(c2 >= 1.0)) throw ConfigError(path + "/c2", "hyperexponential needs c2 >= 1");
      break;
    case Family::Lognormal:
      if (!(c2 > 0.0)) throw ConfigError(path + "/c2", "lognormal needs c2 > 0");
      break;
    case Family::Pareto:
      if (!(shape > 2.0)) throw ConfigError(path + "/shape", "Pareto needs shape > 2");
      break;
  }
}

const char* to_string(DistributionSpec::Family f) {
  switch (f) {
    case DistributionSpec::Family::Exponential: return "exponential";
    case DistributionSpec::Family::Erlang: return "erlang";
    case DistributionSpec::Family::Hyperexp2Balanced: return "hyperexp2";
    case DistributionSpec::Family::Lognormal: return "lognormal";
    case DistributionSpec::Family::Pareto: return "pareto";
  }
  return "?";
}

DistributionSpec default_distribution(double c2) {
  if (c2 == 1.0) return DistributionSpec::exponential();
  if (c2 > 1.0) return DistributionSpec::hyperexp2(c2);
  const double k = 1.0 / c2;
  if (std::abs(k - std::round(k)) < 1e-12) return DistributionSpec::erlang(static_cast<int>(std::round(k)));
  return DistributionSpec::lognormal(c2);
}

Hyperexp2Params hyperexp2_params(double c2) {
  const double p1 = 0.5 * (1.0 + std::sqrt((c2 - 1.0) / (c2 + 1.0)));
  const double p2 = 1.0 - p1;
  return {p1, p2, 2.0 * p1, 2.0 * p2};
}

MeanOneSampler::MeanOneSampler(const DistributionSpec& spec) : spec_(spec) {
  spec_.validate("/distribution");
  switch (spec_.family) {
    case DistributionSpec::Family::Hyperexp2Balanced:
      hx_ = hyperexp2_params(spec_.c2);
      break;
    case DistributionSpec::Family::Lognormal:
      ln_s_ = std::sqrt(std::log1p(spec_.c2));
      ln_mu_ = -0.5 * ln_s_ * ln_s_;
      break;
    case DistributionSpec::Family::Pareto:
      xm_ = (spec_.shape - 1.0) / spec_.shape;
      break;
    default:
      break;
  }
}

}  // namespace hts
