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

// JSON forms of the domain types, the configuration schema, and the
// NDJSON / CSV / manifest writers. Classes, servers and modes are 1-based
// in every serialized form.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hts/diffusion.hpp"
#include "hts/experiments.hpp"
#include "hts/queue_sim.hpp"

namespace hts {

using Json = nlohmann::json;

void to_json(Json& j, const SystemParams& v);
void from_json(const Json& j, SystemParams& v);
void to_json(Json& j, const ProductForm& v);
void from_json(const Json& j, ProductForm& v);
void to_json(Json& j, const Activity& v);
void from_json(const Json& j, Activity& v);
void to_json(Json& j, const Mode& v);
void from_json(const Json& j, Mode& v);
void to_json(Json& j, const LpStructure& v);
void from_json(const Json& j, LpStructure& v);
void to_json(Json& j, const WcpCoefficients& v);
void from_json(const Json& j, WcpCoefficients& v);
void to_json(Json& j, const ModeCase& v);
void from_json(const Json& j, ModeCase& v);
void to_json(Json& j, const HjbClosedForm& v);
void from_json(const Json& j, HjbClosedForm& v);
void to_json(Json& j, const SymmetryReport& v);
void from_json(const Json& j, SymmetryReport& v);
void to_json(Json& j, const DistributionSpec& v);
void from_json(const Json& j, DistributionSpec& v);
void to_json(Json& j, const StreamDistributions& v);
void from_json(const Json& j, StreamDistributions& v);
void to_json(Json& j, const PolicySpec& v);
void from_json(const Json& j, PolicySpec& v);
void to_json(Json& j, const ScalingPolicy& v);
void from_json(const Json& j, ScalingPolicy& v);
void to_json(Json& j, const SimConfig& v);
void from_json(const Json& j, SimConfig& v);
void to_json(Json& j, const RunStats& v);
void from_json(const Json& j, RunStats& v);
void to_json(Json& j, const Event& v);
void from_json(const Json& j, Event& v);
void to_json(Json& j, const DiffusionSpec& v);
void from_json(const Json& j, DiffusionSpec& v);
void to_json(Json& j, const CostEstimate& v);
void from_json(const Json& j, CostEstimate& v);
void to_json(Json& j, const QueueCostEstimate& v);
void from_json(const Json& j, QueueCostEstimate& v);
void to_json(Json& j, const Proportion& v);
void from_json(const Json& j, Proportion& v);
void to_json(Json& j, const MeanSe& v);
void from_json(const Json& j, MeanSe& v);
void to_json(Json& j, const LadderConfig& v);
void from_json(const Json& j, LadderConfig& v);
void to_json(Json& j, const LadderRow& v);
void from_json(const Json& j, LadderRow& v);
void to_json(Json& j, const ConvergenceReport& v);
void from_json(const Json& j, ConvergenceReport& v);

// ------------------------------------------------------------------ config

struct SimulationSection {
  double n = 400.0;
  int replications = 1;
  SimConfig sim{};
  bool operator==(const SimulationSection&) const = default;
};

struct DiffusionSection {
  double dt = 1e-3;
  double horizon = -1.0;  // < 0: 40/gamma
  double z0 = 0.0;
  std::size_t paths = 10000;
  Reflection reflection = Reflection::BridgeCorrected;
  double sample_period = 0.01;  // path.csv spacing for path 0; 0 disables
  bool operator==(const DiffusionSection&) const = default;
};

/// One entry of the experiment case table.
struct CaseSpec {
  std::string name;
  SystemParams system{};
  std::optional<StreamDistributions> distributions;
  std::optional<PolicyName> policy;
  bool operator==(const CaseSpec&) const = default;
};

struct Config {
  SystemParams system{};
  double m_moment = 3.0;
  std::optional<double> a_bar;
  std::optional<PolicyName> policy;
  std::optional<StreamDistributions> distributions;  // default: by SCV
  SimulationSection simulation{};
  DiffusionSection diffusion{};
  LadderConfig ladder{};
  std::vector<CaseSpec> cases;  // experiment: empty means the top-level system
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool operator==(const Config&) const = default;

  /// Configured distributions or the SCV defaults.
  StreamDistributions resolved_distributions() const;
};

/// Strict parse: unknown keys, wrong types and invalid values raise
/// ConfigError with the JSON-pointer path of the offending value.
Config parse_config(const Json& j);
Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);
void to_json(Json& j, const Config& v);

// ----------------------------------------------------------------- writers

/// One JSON object per line, 1-based class/server labels, mode "L"/"H".
std::string events_ndjson(const std::vector<Event>& events);
std::vector<Event> parse_events_ndjson(const std::string& text);

std::string samples_csv(const std::vector<PathSample>& samples);
std::string diffusion_path_csv(const ReflectedPath& path, double sample_period);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// JSON text as emitted everywhere: 2-space indent, trailing newline.
std::string dump(const Json& j);

}  // namespace hts
