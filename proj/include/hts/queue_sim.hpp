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

// Discrete-event simulation of the n-th system under the six
// non-preemptive policies P, T2, PP, T2T2, T1T2, T2T1.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hts/distributions.hpp"
#include "hts/lp.hpp"
#include "hts/wcp.hpp"

namespace hts {

// ---------------------------------------------------------------- scaling

inline double moment_order_m0() { return 0.5 * (5.0 + std::sqrt(17.0)); }

/// zeta_bar(m) of the threshold exponent window (1/2 - zeta_bar, 1/2).
double zeta_bar(double m);

struct ScalingPolicy {
  double n = 1.0;
  double m_moment = 3.0;
  double a_bar = 11.0 / 24.0;
  long theta = 1;  // ceil(n^a_bar)

  /// a_bar defaults to the midpoint of the window; an override must lie
  /// strictly inside it (ConfigError otherwise).
  static ScalingPolicy make(double n, double m_moment,
                            std::optional<double> a_bar = std::nullopt);
  double theta_hat() const { return static_cast<double>(theta) / std::sqrt(n); }
};

// ---------------------------------------------------------------- policies

enum class PolicyName { P, T2, PP, T2T2, T1T2, T2T1 };
enum class Rule { P, T1, T2 };

const char* to_string(PolicyName p);
const char* to_string(Rule r);
std::optional<PolicyName> policy_from_string(const std::string& s);

struct PolicySpec {
  PolicyName name = PolicyName::P;
  Mode low{}, high{};  // single-mode policies: both equal xi^A
  Rule low_rule = Rule::P, high_rule = Rule::P;
  std::optional<double> zstar;

  bool dual() const { return zstar.has_value(); }
  /// Cases that need moment order above m0 for the optimality result.
  bool needs_high_moments() const;
  bool operator==(const PolicySpec&) const = default;
};

/// The policy the case table assigns to (lp, hjb).
PolicyName applicable_policy(const LpStructure& lp, const HjbClosedForm& hjb);

/// Builds the policy; throws MathError(PolicyCaseMismatch) naming the
/// failed condition when `name` does not fit the instance.
PolicySpec make_policy(PolicyName name, const LpStructure& lp, const HjbClosedForm& hjb);

// -------------------------------------------------------------- primitives

/// Source of interarrival and service times in real (unscaled) units.
class PrimitiveSource {
 public:
  virtual ~PrimitiveSource() = default;
  /// Next interarrival time of class i; infinity stops arrivals.
  virtual double interarrival(int cls) = 0;
  /// Service time of a job of class i started on server k.
  virtual double service(int cls, int server) = 0;
};

/// lambda^n_i = n lambda_i + sqrt(n) lambda_hat_i and likewise mu^n_ik;
/// throws MathError(NonpositiveRate) if any is <= 0.
struct ScaledRates {
  Vec2 lambda{};
  Mat2 mu{};
};
ScaledRates scaled_rates(const SystemParams& params, double n);

struct StreamDistributions {
  std::array<DistributionSpec, 2> arrival{};
  std::array<std::array<DistributionSpec, 2>, 2> service{};

  /// Families matching the configured SCVs (default_distribution).
  static StreamDistributions defaults_for(const SystemParams& params);
  /// Throws ConfigError when a family's SCV disagrees with the configured
  /// C^2 (1e-9) or its parameters are invalid.
  void validate_against(const SystemParams& params) const;
  /// Smallest moment order over the six streams.
  double moment_order() const;
  bool operator==(const StreamDistributions&) const = default;
};

/// Six independent renewal streams: stream 0,1 interarrivals of class 1,2,
/// stream 2 + 2i + k services of activity (i,k). Each stream is a Philox
/// stream keyed by the seed and (replication, stream index).
class RenewalSource final : public PrimitiveSource {
 public:
  RenewalSource(const SystemParams& params, double n, const StreamDistributions& dists,
                std::uint64_t seed, std::uint64_t replication);
  double interarrival(int cls) override;
  double service(int cls, int server) override;

 private:
  ScaledRates rates_;
  std::vector<MeanOneSampler> samplers_;
  std::vector<PhiloxStream> streams_;
};

/// Fixed lists of times; exhausted arrival lists stop arrivals, exhausted
/// service lists repeat their last value.
class ScriptedSource final : public PrimitiveSource {
 public:
  ScriptedSource(std::array<std::vector<double>, 2> interarrivals,
                 std::array<std::array<std::vector<double>, 2>, 2> services);
  double interarrival(int cls) override;
  double service(int cls, int server) override;

 private:
  std::array<std::vector<double>, 2> arr_;
  std::array<std::array<std::vector<double>, 2>, 2> svc_;
  std::array<std::size_t, 2> arr_pos_{};
  std::array<std::array<std::size_t, 2>, 2> svc_pos_{};
};

// ------------------------------------------------------------------ records

enum class EventKind { Arrival, Start, Completion, ModeSwitch };
const char* to_string(EventKind k);

/// cls/server/job are 0-based internally (-1 when not applicable); mode is
/// 0 for xi^L, 1 for xi^H (mode events only).
struct Event {
  double t = 0.0;
  EventKind kind = EventKind::Arrival;
  int cls = -1;
  int server = -1;
  std::int64_t job = -1;
  int mode = -1;
  bool operator==(const Event&) const = default;
};

struct PathSample {
  double t;
  long x1, x2;
  double xhat1, xhat2, what, ihat1, ihat2, lhat;
  int mode;
};

struct SimConfig {
  double horizon = 40.0;            // t0
  double sample_period = 0.0;       // 0: no sampled path
  bool record_events = false;
  double arrival_cutoff = std::numeric_limits<double>::infinity();
  double mode_eps = -1.0;           // < 0: z*/4 for dual policies
  bool check_invariants = true;     // verify conservation and busyness identities at every event
  bool operator==(const SimConfig&) const = default;
};

struct RunStats {
  double cost = 0.0;                 // int_0^t0 e^{-gamma t} h.Xhat dt
  Mat2 busy{};                       // T_ik(t0)
  Vec2 idle{};                       // I_k(t0)
  double rbar = 0.0;
  double mode_low_violation = 0.0;   // int 1{What <= z*-eps} dT_{nonbasic(L)}
  double mode_high_violation = 0.0;  // int 1{What >= z*+eps} dT_{nonbasic(H)}
  Vec2 sup_xhat{};
  double sup_what = 0.0;
  double e_max = 0.0;                // longest completed service or interarrival gap
  double sup_hx = 0.0;               // sup_t h.Xhat(t), for the cost tail bound
  std::array<std::int64_t, 2> arrivals{};
  std::array<std::array<std::int64_t, 2>, 2> departures{};
  std::int64_t events = 0;
  std::int64_t mode_switches = 0;
  std::int64_t nonbasic_starts = 0;  // must stay 0
  double max_busyness_error = 0.0;   // max |I_k - (t - sum_i T_ik)| over events
  std::int64_t conservation_failures = 0;
  bool operator==(const RunStats&) const = default;
};

struct TrajectoryRecord {
  RunStats stats;
  std::vector<Event> events;
  std::vector<PathSample> samples;
};

/// Everything run() needs that does not change between replications.
struct SimModel {
  SystemParams params;
  LpStructure lp;
  PolicySpec policy;
  ScalingPolicy scaling;
};

TrajectoryRecord run(const SimModel& model, const SimConfig& cfg, PrimitiveSource& src);

/// Mode-fidelity epsilon actually used by run().
double effective_mode_eps(const SimModel& model, const SimConfig& cfg);

struct QueueCostEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;  // max sup_t h.Xhat * e^{-gamma t0} / gamma
};

/// Mean discounted cost over replications; throws TailBoundExceeded when
/// the tail bound exceeds tail_tol.
QueueCostEstimate cost_estimate(const std::vector<RunStats>& runs, const SystemParams& params,
                                double horizon, double tail_tol = 1e-6);

/// Recomputes e_max from an event log up to time t.
double e_max(const std::vector<Event>& events, double t);

/// Log-level checks: non-preemption, FIFO within class, non-basic
/// exclusion. Returns an empty string when all pass, else the first failure.
std::string check_event_log(const std::vector<Event>& events, const SimModel& model);

}  // namespace hts
