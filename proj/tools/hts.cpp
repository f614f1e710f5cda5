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

// hts: command-line driver. Exit codes: 0 success, 1 I/O or internal
// failure, 2 configuration or usage error, 3 mathematical refusal.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hts/diffusion.hpp"
#include "hts/experiments.hpp"
#include "hts/io.hpp"
#include "hts/parallel.hpp"

using namespace hts;

namespace {

constexpr const char* kVersion = "hts 0.1.0";

struct Analysis {
  LpStructure lp;
  WcpCoefficients coeffs;
  HjbClosedForm hjb;
};

Analysis analyze(const SystemParams& params) {
  Analysis a;
  a.lp = analyze_lp(params);
  a.coeffs = wcp_coefficients(params, a.lp);
  a.hjb = solve_hjb(a.coeffs);
  return a;
}

// Outputs are collected first and written in order, then listed with their
// hashes in manifest.json.
class Outputs {
 public:
  Outputs(std::string dir, std::string command, const Config& cfg)
      : dir_(std::move(dir)), command_(std::move(command)), cfg_(cfg) {}
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void write() const {
    Json list = Json::array();
    for (const auto& [name, content] : files_) {
      write_file(dir_ + "/" + name, content);
      list.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
    }
    const Json manifest{{"command", command_},
                        {"version", kVersion},
                        {"config_hash", hex64(fnv1a64(Json(cfg_).dump()))},
                        {"seed", cfg_.seed},
                        {"outputs", list}};
    write_file(dir_ + "/manifest.json", dump(manifest));
    for (const auto& [name, content] : files_) std::cout << dir_ << "/" << name << "\n";
    std::cout << dir_ << "/manifest.json\n";
  }

 private:
  std::string dir_, command_;
  const Config& cfg_;
  std::vector<std::pair<std::string, std::string>> files_;
};

int cmd_analyze(const Config& cfg) {
  const Analysis a = analyze(cfg.system);
  const PolicyName name = cfg.policy.value_or(applicable_policy(a.lp, a.hjb));
  const PolicySpec pol = make_policy(name, a.lp, a.hjb);
  Json out{{"system", cfg.system},
           {"lp", a.lp},
           {"wcp", a.coeffs},
           {"hjb", a.hjb},
           {"zstar", a.hjb.zstar ? Json(*a.hjb.zstar) : Json(nullptr)},
           {"v0", v0(cfg.system, a.lp, a.hjb)},
           {"policy", pol},
           {"symmetry", symmetry_check(cfg.system, a.lp)}};
  std::cout << dump(out);
  return 0;
}

int cmd_simulate(const Config& cfg, const std::string& dir) {
  const Analysis a = analyze(cfg.system);
  const StreamDistributions dists = cfg.resolved_distributions();
  const PolicyName name = cfg.policy.value_or(applicable_policy(a.lp, a.hjb));
  const SimModel model{cfg.system, a.lp, make_policy(name, a.lp, a.hjb),
                       ScalingPolicy::make(cfg.simulation.n, cfg.m_moment, cfg.a_bar)};
  const auto reps = static_cast<std::size_t>(cfg.simulation.replications);
  std::vector<TrajectoryRecord> recs(reps);
  parallel_for(reps, 0, [&](std::size_t r) {
    SimConfig sc = cfg.simulation.sim;
    // events and the sampled path are kept for replication 0 only
    if (r > 0) {
      sc.record_events = false;
      sc.sample_period = 0.0;
    }
    RenewalSource src(cfg.system, cfg.simulation.n, dists, cfg.seed, r);
    recs[r] = run(model, sc, src);
  });
  std::vector<RunStats> stats;
  for (const auto& r : recs) stats.push_back(r.stats);
  Json out{{"policy", model.policy},
           {"scaling", model.scaling},
           {"simulation", cfg.simulation.sim},
           {"mode_eps", effective_mode_eps(model, cfg.simulation.sim)},
           {"v0", v0(cfg.system, a.lp, a.hjb)},
           {"runs", stats}};
  out["cost"] = cost_estimate(stats, cfg.system, cfg.simulation.sim.horizon);
  Outputs o(dir, "simulate", cfg);
  o.add("stats.json", dump(out));
  if (cfg.simulation.sim.record_events) o.add("events.ndjson", events_ndjson(recs[0].events));
  if (cfg.simulation.sim.sample_period > 0.0) o.add("path.csv", samples_csv(recs[0].samples));
  o.write();
  return 0;
}

int cmd_diffusion(const Config& cfg, const std::string& dir) {
  const Analysis a = analyze(cfg.system);
  const auto& d = cfg.diffusion;
  DiffusionSpec spec = spec_from_hjb(a.hjb, d.dt);
  if (d.horizon > 0.0) spec.horizon = d.horizon;
  spec.z0 = d.z0;
  spec.reflection = d.reflection;
  spec.validate();
  const CostEstimate est = estimate_cost(spec, d.paths, cfg.seed);
  Json out{{"spec", spec},
           {"cost", est},
           {"value_closed_form", a.hjb.value(d.z0)},
           {"hjb", a.hjb}};
  Outputs o(dir, "diffusion", cfg);
  o.add("cost.json", dump(out));
  if (d.sample_period > 0.0) o.add("path.csv", diffusion_path_csv(simulate(spec, cfg.seed, 0), d.sample_period));
  o.write();
  return 0;
}

int cmd_experiment(const Config& cfg, const std::string& dir) {
  std::vector<CaseSpec> cases = cfg.cases;
  if (cases.empty()) cases.push_back({"main", cfg.system, cfg.distributions, cfg.policy});
  Outputs o(dir, "experiment", cfg);
  for (const auto& c : cases) {
    const StreamDistributions dists =
        c.distributions ? *c.distributions : StreamDistributions::defaults_for(c.system);
    const ConvergenceReport rep = ao_experiment(cfg.ladder, c.system, dists, c.policy);
    for (const auto& w : rep.warnings) std::cerr << "warning [" << c.name << "]: " << w << "\n";
    Json j = rep;
    j["case"] = c.name;
    o.add("report_" + c.name + ".json", dump(j));
    o.add("report_" + c.name + ".csv", report_csv(rep));
  }
  o.write();
  return 0;
}

int cmd_value_grid(const Config& cfg, const std::string& dir, double x0, double xmax, int points) {
  if (!(x0 >= 0.0)) throw ConfigError("--x0", "must be >= 0");
  if (!(xmax > x0)) throw ConfigError("--xmax", "must be > x0");
  if (points < 2) throw ConfigError("--points", "must be >= 2");
  const Analysis a = analyze(cfg.system);
  std::string csv = "x,value,hjb_residual\n";
  const double hstep = 1e-4 * std::max(1.0, xmax);
  for (int j = 0; j < points; ++j) {
    const double x = x0 + (xmax - x0) * j / (points - 1);
    char line[128];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.6e\n", x, a.hjb.value(x),
                  x >= hstep ? hjb_residual(a.hjb, x, hstep) : 0.0);
    csv += line;
  }
  Outputs o(dir, "dump-value-grid", cfg);
  o.add("value_grid.csv", csv);
  o.write();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel server system laboratory: LP modes, workload control, simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  double x0 = 0.0, xmax = 10.0;
  int points = 201;

  auto add_common = [&](CLI::App* sub, bool writes) {
    sub->add_option("config", config_path, "configuration JSON")->required();
    sub->add_option("--seed", seed, "override the config seed");
    if (writes) sub->add_option("--out", out_dir, "output directory (default: config output.dir)");
  };
  auto* analyze_cmd = app.add_subcommand("analyze", "print LP structure and workload-control solution");
  add_common(analyze_cmd, false);
  auto* sim_cmd = app.add_subcommand("simulate", "simulate the n-th queueing system");
  add_common(sim_cmd, true);
  auto* diff_cmd = app.add_subcommand("diffusion", "Monte Carlo of the limiting reflected diffusion");
  add_common(diff_cmd, true);
  auto* exp_cmd = app.add_subcommand("experiment", "run the n-ladder for each case");
  add_common(exp_cmd, true);
  auto* grid_cmd = app.add_subcommand("dump-value-grid", "tabulate V_WCP and its HJB residual");
  add_common(grid_cmd, true);
  grid_cmd->add_option("--x0", x0, "smallest workload");
  grid_cmd->add_option("--xmax", xmax, "largest workload");
  grid_cmd->add_option("--points", points, "grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Config cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.ladder.seed = *seed;
    }
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    if (*analyze_cmd) return cmd_analyze(cfg);
    if (*sim_cmd) return cmd_simulate(cfg, dir);
    if (*diff_cmd) return cmd_diffusion(cfg, dir);
    if (*exp_cmd) return cmd_experiment(cfg, dir);
    if (*grid_cmd) return cmd_value_grid(cfg, dir, x0, xmax, points);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << (e.path().empty() ? "/" : e.path()) << ": " << e.message() << "\n";
    return 2;
  } catch (const MathError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
