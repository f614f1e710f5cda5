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

// n-ladder experiments: cost against the lower bound V0, state-space
// collapse, boundary idleness, mode fidelity, e_max and a diagnostic
// comparison with the limiting diffusion.

#include <optional>
#include <string>
#include <vector>

#include "hts/queue_sim.hpp"

namespace hts {

struct Proportion {
  double estimate = 0.0;
  double std_error = 0.0;  // binomial
  std::size_t count = 0;
};

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs);

/// Fraction of runs with sup_t Xhat_p >= 2 Theta_hat.
Proportion ssc_statistic(const std::vector<RunStats>& runs, const ScalingPolicy& scaling, int p);

/// R-bar of one run (streamed by the simulator).
double rbar_statistic(const RunStats& run);

struct ModeFidelity {
  double low_violation = 0.0;
  double high_violation = 0.0;
};

/// Throws std::invalid_argument for single-mode policies.
ModeFidelity mode_fidelity(const RunStats& run, const SimModel& model);

/// Statistics recomputed from an event log by a linear scan, independent
/// of the simulator's streaming accumulators.
struct ReplayStats {
  double cost = 0.0;
  Mat2 busy{};
  Vec2 idle{};
  double rbar = 0.0;
  double mode_low_violation = 0.0;
  double mode_high_violation = 0.0;
  Vec2 sup_xhat{};
  double e_max = 0.0;
};
ReplayStats replay_event_log(const std::vector<Event>& events, const SimModel& model,
                             const SimConfig& cfg);
/// Empty string when every replayed statistic equals the streamed one
/// exactly, else a description of the first mismatch.
std::string compare_replay(const RunStats& streamed, const ReplayStats& replayed);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Nearest-rank quantile.
double quantile(std::vector<double> xs, double q);

/// est[j+1] <= est[j] + sqrt(se[j]^2 + se[j+1]^2) for all j.
bool non_increasing_within_se(const std::vector<double>& est, const std::vector<double>& se);

struct LadderConfig {
  std::vector<double> n_values{100, 400, 1600};
  int replications = 200;
  double horizon = -1.0;    // < 0: 40/gamma
  double mode_eps = -1.0;   // < 0: z*/4
  double m_moment = 3.0;
  std::optional<double> a_bar;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double ks_time = -1.0;    // < 0: 10/gamma
  int ks_limit_paths = 2000;
  int replay_checks = 2;    // replications per n whose event log is replayed

  /// Throws ConfigError for decreasing n, fewer than 30 replications, etc.
  void validate() const;
  bool operator==(const LadderConfig&) const = default;
};

struct LadderRow {
  double n = 0.0;
  long theta = 0;
  double theta_hat = 0.0;
  QueueCostEstimate cost;
  Proportion ssc;
  MeanSe rbar;
  MeanSe mode_low;
  MeanSe mode_high;
  std::array<double, 3> e_max_quantiles{};  // 10%, 50%, 90%
  MeanSe sup_m2;                            // E (sup What)^2, descriptive
  double ks = 0.0;
  std::size_t ks_samples = 0;
  bool replay_match = true;
  std::int64_t invariant_failures = 0;      // conservation, busyness, non-basic, log checks
};

struct ConvergenceReport {
  std::string policy;
  bool dual = false;
  double v0 = 0.0;
  std::optional<double> zstar;
  int p = 0;
  double horizon = 0.0;
  int replications = 0;
  std::vector<LadderRow> rows;
  std::vector<std::string> warnings;
};

/// Runs the ladder for `policy` (default: the case-table policy). Throws
/// MathError(PolicyCaseMismatch) when the requested policy does not apply.
ConvergenceReport ao_experiment(const LadderConfig& ladder, const SystemParams& params,
                                const StreamDistributions& dists,
                                std::optional<PolicyName> policy = std::nullopt);

/// Rows "n,statistic,estimate,se".
std::string report_csv(const ConvergenceReport& r);

}  // namespace hts
