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

#include "hts/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hts {

namespace {

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

// Strict object reader: every key must be consumed before finish().
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "required key is missing");
    return j_.at(key);
  }
  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return join(path_, key); }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double num(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

// null stands for +infinity where a field allows it.
double num_or_inf(const Json& j, const std::string& path) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return num(j, path);
}

Json inf_or_num(double v) { return std::isinf(v) ? Json(nullptr) : Json(v); }

long long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

std::uint64_t uinteger(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::string str(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

Vec2 vec2(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected an array of 2 numbers");
  return {num(j[0], path + "/0"), num(j[1], path + "/1")};
}

Mat2 mat2(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected a 2x2 array");
  return {vec2(j[0], path + "/0"), vec2(j[1], path + "/1")};
}

// 1-based label in {1, 2} -> 0-based index.
int label(const Json& j, const std::string& path) {
  const long long v = integer(j, path);
  if (v != 1 && v != 2) throw ConfigError(path, "expected 1 or 2");
  return static_cast<int>(v - 1);
}

int positive_int(const Json& j, const std::string& path) {
  const long long v = integer(j, path);
  if (v < 0 || v > std::numeric_limits<int>::max()) throw ConfigError(path, "out of range");
  return static_cast<int>(v);
}

SystemParams parse_system(const Json& j, const std::string& path) {
  Obj o(j, path);
  SystemParams s;
  s.lambda = vec2(o.at("lambda"), o.path("lambda"));
  s.mu = mat2(o.at("mu"), o.path("mu"));
  if (auto* v = o.find("lambda_hat")) s.lambda_hat = vec2(*v, o.path("lambda_hat"));
  if (auto* v = o.find("mu_hat")) s.mu_hat = mat2(*v, o.path("mu_hat"));
  if (auto* v = o.find("c2_arrival")) s.c2_arrival = vec2(*v, o.path("c2_arrival"));
  if (auto* v = o.find("c2_service")) s.c2_service = mat2(*v, o.path("c2_service"));
  s.gamma = num(o.at("gamma"), o.path("gamma"));
  s.h = vec2(o.at("h"), o.path("h"));
  o.finish();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    // validate() reports paths rooted at /system
    throw ConfigError(path + e.path().substr(std::string("/system").size()), e.message());
  }
  return s;
}

DistributionSpec parse_distribution(const Json& j, const std::string& path) {
  Obj o(j, path);
  const std::string fam = str(o.at("family"), o.path("family"));
  DistributionSpec d;
  if (fam == "exponential") {
    d = DistributionSpec::exponential();
  } else if (fam == "erlang") {
    d = DistributionSpec::erlang(positive_int(o.at("k"), o.path("k")));
  } else if (fam == "hyperexp2") {
    d = DistributionSpec::hyperexp2(num(o.at("c2"), o.path("c2")));
  } else if (fam == "lognormal") {
    d = DistributionSpec::lognormal(num(o.at("c2"), o.path("c2")));
  } else if (fam == "pareto") {
    d = DistributionSpec::pareto(num(o.at("shape"), o.path("shape")));
  } else {
    throw ConfigError(o.path("family"), "unknown family '" + fam + "'");
  }
  o.finish();
  d.validate(path);
  return d;
}

StreamDistributions parse_streams(const Json& j, const std::string& path) {
  Obj o(j, path);
  StreamDistributions s;
  const Json& a = o.at("arrival");
  if (!a.is_array() || a.size() != 2) throw ConfigError(o.path("arrival"), "expected 2 entries");
  for (int i = 0; i < 2; ++i) s.arrival[i] = parse_distribution(a[i], o.path("arrival") + "/" + std::to_string(i));
  const Json& sv = o.at("service");
  if (!sv.is_array() || sv.size() != 2) throw ConfigError(o.path("service"), "expected 2x2 entries");
  for (int i = 0; i < 2; ++i) {
    const std::string pi = o.path("service") + "/" + std::to_string(i);
    if (!sv[i].is_array() || sv[i].size() != 2) throw ConfigError(pi, "expected 2 entries");
    for (int k = 0; k < 2; ++k)
      s.service[i][k] = parse_distribution(sv[i][k], pi + "/" + std::to_string(k));
  }
  o.finish();
  return s;
}

PolicyName parse_policy_name(const Json& j, const std::string& path) {
  const std::string s = str(j, path);
  auto p = policy_from_string(s);
  if (!p) throw ConfigError(path, "unknown policy '" + s + "' (P, T2, PP, T2T2, T1T2, T2T1)");
  return *p;
}

Reflection parse_reflection(const Json& j, const std::string& path) {
  const std::string s = str(j, path);
  if (s == "projection") return Reflection::Projection;
  if (s == "bridge") return Reflection::BridgeCorrected;
  throw ConfigError(path, "expected 'projection' or 'bridge'");
}

const char* reflection_name(Reflection r) {
  return r == Reflection::Projection ? "projection" : "bridge";
}

void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive and finite");
}

SimulationSection parse_simulation(const Json& j, const std::string& path) {
  Obj o(j, path);
  SimulationSection s;
  if (auto* v = o.find("n")) s.n = num(*v, o.path("n"));
  if (!(s.n >= 1.0)) throw ConfigError(o.path("n"), "must be >= 1");
  if (auto* v = o.find("replications")) s.replications = positive_int(*v, o.path("replications"));
  if (s.replications < 1) throw ConfigError(o.path("replications"), "must be >= 1");
  if (auto* v = o.find("horizon")) s.sim.horizon = num(*v, o.path("horizon"));
  positive(s.sim.horizon, o.path("horizon"));
  if (auto* v = o.find("sample_period")) s.sim.sample_period = num(*v, o.path("sample_period"));
  if (s.sim.sample_period < 0.0) throw ConfigError(o.path("sample_period"), "must be >= 0");
  if (auto* v = o.find("record_events")) s.sim.record_events = boolean(*v, o.path("record_events"));
  if (auto* v = o.find("arrival_cutoff")) s.sim.arrival_cutoff = num_or_inf(*v, o.path("arrival_cutoff"));
  if (auto* v = o.find("mode_eps")) s.sim.mode_eps = num(*v, o.path("mode_eps"));
  if (auto* v = o.find("check_invariants"))
    s.sim.check_invariants = boolean(*v, o.path("check_invariants"));
  o.finish();
  return s;
}

DiffusionSection parse_diffusion(const Json& j, const std::string& path) {
  Obj o(j, path);
  DiffusionSection d;
  if (auto* v = o.find("dt")) d.dt = num(*v, o.path("dt"));
  positive(d.dt, o.path("dt"));
  if (auto* v = o.find("horizon")) d.horizon = num(*v, o.path("horizon"));
  if (d.horizon == 0.0) throw ConfigError(o.path("horizon"), "must be positive (or negative for 40/gamma)");
  if (auto* v = o.find("z0")) d.z0 = num(*v, o.path("z0"));
  if (!(d.z0 >= 0.0)) throw ConfigError(o.path("z0"), "must be >= 0");
  if (auto* v = o.find("paths")) d.paths = uinteger(*v, o.path("paths"));
  if (d.paths < 2) throw ConfigError(o.path("paths"), "must be >= 2");
  if (auto* v = o.find("reflection")) d.reflection = parse_reflection(*v, o.path("reflection"));
  if (auto* v = o.find("sample_period")) d.sample_period = num(*v, o.path("sample_period"));
  if (d.sample_period < 0.0) throw ConfigError(o.path("sample_period"), "must be >= 0");
  o.finish();
  return d;
}

// m_moment, a_bar and seed come from the top level.
LadderConfig parse_ladder(const Json& j, const std::string& path) {
  Obj o(j, path);
  LadderConfig l;
  if (auto* v = o.find("n_values")) {
    if (!v->is_array()) throw ConfigError(o.path("n_values"), "expected an array");
    l.n_values.clear();
    for (std::size_t i = 0; i < v->size(); ++i)
      l.n_values.push_back(num((*v)[i], o.path("n_values") + "/" + std::to_string(i)));
  }
  if (auto* v = o.find("replications")) l.replications = positive_int(*v, o.path("replications"));
  if (auto* v = o.find("horizon")) l.horizon = num(*v, o.path("horizon"));
  if (auto* v = o.find("mode_eps")) l.mode_eps = num(*v, o.path("mode_eps"));
  if (auto* v = o.find("ks_time")) l.ks_time = num(*v, o.path("ks_time"));
  if (auto* v = o.find("ks_limit_paths")) l.ks_limit_paths = positive_int(*v, o.path("ks_limit_paths"));
  if (auto* v = o.find("replay_checks")) l.replay_checks = positive_int(*v, o.path("replay_checks"));
  o.finish();
  try {
    l.validate();
  } catch (const ConfigError& e) {
    // validate() reports paths rooted at /ladder
    throw ConfigError(path + e.path().substr(std::string("/ladder").size()), e.message());
  }
  return l;
}

CaseSpec parse_case(const Json& j, const std::string& path) {
  Obj o(j, path);
  CaseSpec c;
  c.name = str(o.at("name"), o.path("name"));
  if (c.name.empty() || c.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError(o.path("name"), "must be a nonempty file-name-safe string");
  c.system = parse_system(o.at("system"), o.path("system"));
  if (o.has("distributions")) c.distributions = parse_streams(*o.find("distributions"), o.path("distributions"));
  else o.find("distributions");
  if (o.has("policy")) c.policy = parse_policy_name(*o.find("policy"), o.path("policy"));
  else o.find("policy");
  o.finish();
  if (c.distributions) {
    try {
      c.distributions->validate_against(c.system);
    } catch (const ConfigError& e) {
      throw ConfigError(path + e.path(), e.message());
    }
  }
  return c;
}

Json mode_case_kind(ModeCase::Kind k) { return k == ModeCase::Kind::Single ? "single" : "dual"; }

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

// ------------------------------------------------------------ lp and wcp

void to_json(Json& j, const SystemParams& v) {
  j = Json{{"lambda", v.lambda},         {"mu", v.mu},
           {"lambda_hat", v.lambda_hat}, {"mu_hat", v.mu_hat},
           {"c2_arrival", v.c2_arrival}, {"c2_service", v.c2_service},
           {"gamma", v.gamma},           {"h", v.h}};
}
void from_json(const Json& j, SystemParams& v) { v = parse_system(j, ""); }

void to_json(Json& j, const ProductForm& v) { j = Json{{"alpha", v.alpha}, {"beta", v.beta}}; }
void from_json(const Json& j, ProductForm& v) {
  v.alpha = vec2(j.at("alpha"), "/alpha");
  v.beta = vec2(j.at("beta"), "/beta");
}

void to_json(Json& j, const Activity& v) { j = Json{{"class", v.cls + 1}, {"server", v.server + 1}}; }
void from_json(const Json& j, Activity& v) {
  v.cls = label(j.at("class"), "/class");
  v.server = label(j.at("server"), "/server");
}

void to_json(Json& j, const Mode& v) {
  j = Json{{"xi", v.xi},         {"nonbasic", v.nonbasic}, {"i1", v.i1 + 1},
           {"i2", v.i2 + 1},     {"k1", v.k1 + 1},         {"k2", v.k2 + 1}};
}
void from_json(const Json& j, Mode& v) {
  v.xi = mat2(j.at("xi"), "/xi");
  j.at("nonbasic").get_to(v.nonbasic);
  v.i1 = label(j.at("i1"), "/i1");
  v.i2 = label(j.at("i2"), "/i2");
  v.k1 = label(j.at("k1"), "/k1");
  v.k2 = label(j.at("k2"), "/k2");
}

void to_json(Json& j, const LpStructure& v) {
  j = Json{{"rho_star", v.rho_star},
           {"product_form", v.product_form},
           {"mode1", v.mode1},
           {"mode2", v.mode2},
           {"switching", to_string(v.switching)},
           {"p", v.p + 1},
           {"q", v.q + 1}};
}
void from_json(const Json& j, LpStructure& v) {
  v.rho_star = num(j.at("rho_star"), "/rho_star");
  j.at("product_form").get_to(v.product_form);
  j.at("mode1").get_to(v.mode1);
  j.at("mode2").get_to(v.mode2);
  const std::string s = str(j.at("switching"), "/switching");
  if (s == "ClassSwitched") v.switching = Switching::ClassSwitched;
  else if (s == "ServerSwitched") v.switching = Switching::ServerSwitched;
  else throw ConfigError("/switching", "unknown switching type");
  v.p = label(j.at("p"), "/p");
  v.q = label(j.at("q"), "/q");
}

void to_json(Json& j, const WcpCoefficients& v) {
  j = Json{{"b", v.b},
           {"sigma", v.sigma},
           {"sigma_A", v.sigma_A},
           {"sigma_S", v.sigma_S},
           {"gamma", v.gamma}};
}
void from_json(const Json& j, WcpCoefficients& v) {
  v.b = vec2(j.at("b"), "/b");
  v.sigma = vec2(j.at("sigma"), "/sigma");
  v.sigma_A = vec2(j.at("sigma_A"), "/sigma_A");
  v.sigma_S = mat2(j.at("sigma_S"), "/sigma_S");
  v.gamma = num(j.at("gamma"), "/gamma");
}

void to_json(Json& j, const ModeCase& v) {
  j = Json{{"kind", mode_case_kind(v.kind)},
           {"active", v.active + 1},
           {"low", v.low + 1},
           {"high", v.high + 1}};
}
void from_json(const Json& j, ModeCase& v) {
  const std::string k = str(j.at("kind"), "/kind");
  if (k == "single") v.kind = ModeCase::Kind::Single;
  else if (k == "dual") v.kind = ModeCase::Kind::Dual;
  else throw ConfigError("/kind", "expected 'single' or 'dual'");
  v.active = label(j.at("active"), "/active");
  v.low = label(j.at("low"), "/low");
  v.high = label(j.at("high"), "/high");
}

void to_json(Json& j, const HjbClosedForm& v) {
  j = Json{{"mode_case", v.mode_case},
           {"beta_r", v.beta_r},
           {"rho_r", v.rho_r},
           {"nu_r", v.nu_r},
           {"zstar", v.zstar ? Json(*v.zstar) : Json(nullptr)},
           {"value_at_zero", v.value_at_zero},
           {"coefficients", v.coeffs}};
}
void from_json(const Json& j, HjbClosedForm& v) {
  j.at("mode_case").get_to(v.mode_case);
  v.beta_r = num(j.at("beta_r"), "/beta_r");
  v.rho_r = num(j.at("rho_r"), "/rho_r");
  v.nu_r = num(j.at("nu_r"), "/nu_r");
  v.zstar = j.at("zstar").is_null() ? std::nullopt : std::optional(num(j.at("zstar"), "/zstar"));
  v.value_at_zero = num(j.at("value_at_zero"), "/value_at_zero");
  j.at("coefficients").get_to(v.coeffs);
}

void to_json(Json& j, const SymmetryReport& v) {
  j = Json{{"sy1", v.sy1},
           {"sy2", v.sy2},
           {"sy3", v.sy3},
           {"b_gap", v.b_gap},
           {"sigma_gap", v.sigma_gap},
           {"drift_equal", v.drift_equal},
           {"sigma_equal", v.sigma_equal},
           {"single_mode", v.single_mode}};
}
void from_json(const Json& j, SymmetryReport& v) {
  j.at("sy1").get_to(v.sy1);
  j.at("sy2").get_to(v.sy2);
  j.at("sy3").get_to(v.sy3);
  j.at("b_gap").get_to(v.b_gap);
  j.at("sigma_gap").get_to(v.sigma_gap);
  j.at("drift_equal").get_to(v.drift_equal);
  j.at("sigma_equal").get_to(v.sigma_equal);
  j.at("single_mode").get_to(v.single_mode);
}

// ---------------------------------------------------------- distributions

void to_json(Json& j, const DistributionSpec& v) {
  j = Json{{"family", to_string(v.family)}};
  switch (v.family) {
    case DistributionSpec::Family::Exponential: break;
    case DistributionSpec::Family::Erlang: j["k"] = v.k; break;
    case DistributionSpec::Family::Hyperexp2Balanced:
    case DistributionSpec::Family::Lognormal: j["c2"] = v.c2; break;
    case DistributionSpec::Family::Pareto: j["shape"] = v.shape; break;
  }
}
void from_json(const Json& j, DistributionSpec& v) { v = parse_distribution(j, ""); }

void to_json(Json& j, const StreamDistributions& v) {
  j = Json{{"arrival", v.arrival}, {"service", v.service}};
}
void from_json(const Json& j, StreamDistributions& v) { v = parse_streams(j, ""); }

// -------------------------------------------------------------- simulator

void to_json(Json& j, const PolicySpec& v) {
  j = Json{{"name", to_string(v.name)},
           {"low", v.low},
           {"high", v.high},
           {"low_rule", to_string(v.low_rule)},
           {"high_rule", to_string(v.high_rule)},
           {"zstar", v.zstar ? Json(*v.zstar) : Json(nullptr)}};
}
void from_json(const Json& j, PolicySpec& v) {
  v.name = parse_policy_name(j.at("name"), "/name");
  j.at("low").get_to(v.low);
  j.at("high").get_to(v.high);
  auto rule = [](const Json& r, const std::string& path) {
    const std::string s = str(r, path);
    if (s == "P") return Rule::P;
    if (s == "T1") return Rule::T1;
    if (s == "T2") return Rule::T2;
    throw ConfigError(path, "unknown rule");
  };
  v.low_rule = rule(j.at("low_rule"), "/low_rule");
  v.high_rule = rule(j.at("high_rule"), "/high_rule");
  v.zstar = j.at("zstar").is_null() ? std::nullopt : std::optional(num(j.at("zstar"), "/zstar"));
}

void to_json(Json& j, const ScalingPolicy& v) {
  j = Json{{"n", v.n}, {"m", v.m_moment}, {"a_bar", v.a_bar}, {"theta", v.theta}};
}
void from_json(const Json& j, ScalingPolicy& v) {
  v.n = num(j.at("n"), "/n");
  v.m_moment = num(j.at("m"), "/m");
  v.a_bar = num(j.at("a_bar"), "/a_bar");
  v.theta = static_cast<long>(integer(j.at("theta"), "/theta"));
}

void to_json(Json& j, const SimConfig& v) {
  j = Json{{"horizon", v.horizon},
           {"sample_period", v.sample_period},
           {"record_events", v.record_events},
           {"arrival_cutoff", inf_or_num(v.arrival_cutoff)},
           {"mode_eps", v.mode_eps},
           {"check_invariants", v.check_invariants}};
}
void from_json(const Json& j, SimConfig& v) {
  Json wrapped = j;
  wrapped["n"] = 1.0;
  v = parse_simulation(wrapped, "").sim;
}

void to_json(Json& j, const RunStats& v) {
  j = Json{{"cost", v.cost},
           {"busy", v.busy},
           {"idle", v.idle},
           {"rbar", v.rbar},
           {"mode_low_violation", v.mode_low_violation},
           {"mode_high_violation", v.mode_high_violation},
           {"sup_xhat", v.sup_xhat},
           {"sup_what", v.sup_what},
           {"e_max", v.e_max},
           {"sup_hx", v.sup_hx},
           {"arrivals", v.arrivals},
           {"departures", v.departures},
           {"events", v.events},
           {"mode_switches", v.mode_switches},
           {"nonbasic_starts", v.nonbasic_starts},
           {"max_busyness_error", v.max_busyness_error},
           {"conservation_failures", v.conservation_failures}};
}
void from_json(const Json& j, RunStats& v) {
  j.at("cost").get_to(v.cost);
  j.at("busy").get_to(v.busy);
  j.at("idle").get_to(v.idle);
  j.at("rbar").get_to(v.rbar);
  j.at("mode_low_violation").get_to(v.mode_low_violation);
  j.at("mode_high_violation").get_to(v.mode_high_violation);
  j.at("sup_xhat").get_to(v.sup_xhat);
  j.at("sup_what").get_to(v.sup_what);
  j.at("e_max").get_to(v.e_max);
  j.at("sup_hx").get_to(v.sup_hx);
  j.at("arrivals").get_to(v.arrivals);
  j.at("departures").get_to(v.departures);
  j.at("events").get_to(v.events);
  j.at("mode_switches").get_to(v.mode_switches);
  j.at("nonbasic_starts").get_to(v.nonbasic_starts);
  j.at("max_busyness_error").get_to(v.max_busyness_error);
  j.at("conservation_failures").get_to(v.conservation_failures);
}

void to_json(Json& j, const Event& v) {
  j = Json{{"t", v.t}, {"kind", to_string(v.kind)}};
  if (v.cls >= 0) j["class"] = v.cls + 1;
  if (v.server >= 0) j["server"] = v.server + 1;
  if (v.job >= 0) j["job"] = v.job;
  if (v.mode >= 0) j["mode"] = v.mode == 0 ? "L" : "H";
}
void from_json(const Json& j, Event& v) {
  Obj o(j, "");
  v = Event{};
  v.t = num(o.at("t"), "/t");
  const std::string k = str(o.at("kind"), "/kind");
  if (k == "arrival") v.kind = EventKind::Arrival;
  else if (k == "start") v.kind = EventKind::Start;
  else if (k == "completion") v.kind = EventKind::Completion;
  else if (k == "mode") v.kind = EventKind::ModeSwitch;
  else throw ConfigError("/kind", "unknown event kind");
  if (auto* c = o.find("class")) v.cls = label(*c, "/class");
  if (auto* s = o.find("server")) v.server = label(*s, "/server");
  if (auto* b = o.find("job")) v.job = integer(*b, "/job");
  if (auto* m = o.find("mode")) {
    const std::string s = str(*m, "/mode");
    if (s != "L" && s != "H") throw ConfigError("/mode", "expected 'L' or 'H'");
    v.mode = s == "L" ? 0 : 1;
  }
  o.finish();
}

// -------------------------------------------------------------- diffusion

void to_json(Json& j, const DiffusionSpec& v) {
  j = Json{{"kind", v.kind == DiffusionSpec::Kind::Rbm ? "rbm" : "switched"},
           {"b", v.b},
           {"sigma", v.sigma},
           {"b_low", v.b_low},
           {"sigma_low", v.sigma_low},
           {"b_high", v.b_high},
           {"sigma_high", v.sigma_high},
           {"zstar", v.zstar},
           {"z0", v.z0},
           {"dt", v.dt},
           {"horizon", v.horizon},
           {"gamma", v.gamma},
           {"reflection", reflection_name(v.reflection)}};
}
void from_json(const Json& j, DiffusionSpec& v) {
  const std::string k = str(j.at("kind"), "/kind");
  if (k == "rbm") v.kind = DiffusionSpec::Kind::Rbm;
  else if (k == "switched") v.kind = DiffusionSpec::Kind::Switched;
  else throw ConfigError("/kind", "expected 'rbm' or 'switched'");
  v.b = num(j.at("b"), "/b");
  v.sigma = num(j.at("sigma"), "/sigma");
  v.b_low = num(j.at("b_low"), "/b_low");
  v.sigma_low = num(j.at("sigma_low"), "/sigma_low");
  v.b_high = num(j.at("b_high"), "/b_high");
  v.sigma_high = num(j.at("sigma_high"), "/sigma_high");
  v.zstar = num(j.at("zstar"), "/zstar");
  v.z0 = num(j.at("z0"), "/z0");
  v.dt = num(j.at("dt"), "/dt");
  v.horizon = num(j.at("horizon"), "/horizon");
  v.gamma = num(j.at("gamma"), "/gamma");
  v.reflection = parse_reflection(j.at("reflection"), "/reflection");
}

void to_json(Json& j, const CostEstimate& v) {
  j = Json{{"estimate", v.estimate},
           {"std_error", v.std_error},
           {"tail_bound", v.tail_bound},
           {"paths", v.paths}};
}
void from_json(const Json& j, CostEstimate& v) {
  j.at("estimate").get_to(v.estimate);
  j.at("std_error").get_to(v.std_error);
  j.at("tail_bound").get_to(v.tail_bound);
  j.at("paths").get_to(v.paths);
}

// ------------------------------------------------------------ experiments

void to_json(Json& j, const QueueCostEstimate& v) {
  j = Json{{"estimate", v.estimate}, {"std_error", v.std_error}, {"tail_bound", v.tail_bound}};
}
void from_json(const Json& j, QueueCostEstimate& v) {
  j.at("estimate").get_to(v.estimate);
  j.at("std_error").get_to(v.std_error);
  j.at("tail_bound").get_to(v.tail_bound);
}

void to_json(Json& j, const Proportion& v) {
  j = Json{{"estimate", v.estimate}, {"std_error", v.std_error}, {"count", v.count}};
}
void from_json(const Json& j, Proportion& v) {
  j.at("estimate").get_to(v.estimate);
  j.at("std_error").get_to(v.std_error);
  j.at("count").get_to(v.count);
}

void to_json(Json& j, const MeanSe& v) { j = Json{{"mean", v.mean}, {"std_error", v.std_error}}; }
void from_json(const Json& j, MeanSe& v) {
  j.at("mean").get_to(v.mean);
  j.at("std_error").get_to(v.std_error);
}

void to_json(Json& j, const LadderConfig& v) {
  j = Json{{"n_values", v.n_values},
           {"replications", v.replications},
           {"horizon", v.horizon},
           {"mode_eps", v.mode_eps},
           {"m", v.m_moment},
           {"a_bar", v.a_bar ? Json(*v.a_bar) : Json(nullptr)},
           {"seed", v.seed},
           {"threads", v.threads},
           {"ks_time", v.ks_time},
           {"ks_limit_paths", v.ks_limit_paths},
           {"replay_checks", v.replay_checks}};
}
void from_json(const Json& j, LadderConfig& v) {
  j.at("n_values").get_to(v.n_values);
  j.at("replications").get_to(v.replications);
  j.at("horizon").get_to(v.horizon);
  j.at("mode_eps").get_to(v.mode_eps);
  j.at("m").get_to(v.m_moment);
  v.a_bar = j.at("a_bar").is_null() ? std::nullopt : std::optional(j.at("a_bar").get<double>());
  j.at("seed").get_to(v.seed);
  j.at("threads").get_to(v.threads);
  j.at("ks_time").get_to(v.ks_time);
  j.at("ks_limit_paths").get_to(v.ks_limit_paths);
  j.at("replay_checks").get_to(v.replay_checks);
}

void to_json(Json& j, const LadderRow& v) {
  j = Json{{"n", v.n},
           {"theta", v.theta},
           {"theta_hat", v.theta_hat},
           {"cost", v.cost},
           {"ssc", v.ssc},
           {"rbar", v.rbar},
           {"mode_low", v.mode_low},
           {"mode_high", v.mode_high},
           {"e_max_quantiles", v.e_max_quantiles},
           {"sup_m2", v.sup_m2},
           {"ks", v.ks},
           {"ks_samples", v.ks_samples},
           {"replay_match", v.replay_match},
           {"invariant_failures", v.invariant_failures}};
}
void from_json(const Json& j, LadderRow& v) {
  j.at("n").get_to(v.n);
  j.at("theta").get_to(v.theta);
  j.at("theta_hat").get_to(v.theta_hat);
  j.at("cost").get_to(v.cost);
  j.at("ssc").get_to(v.ssc);
  j.at("rbar").get_to(v.rbar);
  j.at("mode_low").get_to(v.mode_low);
  j.at("mode_high").get_to(v.mode_high);
  j.at("e_max_quantiles").get_to(v.e_max_quantiles);
  j.at("sup_m2").get_to(v.sup_m2);
  j.at("ks").get_to(v.ks);
  j.at("ks_samples").get_to(v.ks_samples);
  j.at("replay_match").get_to(v.replay_match);
  j.at("invariant_failures").get_to(v.invariant_failures);
}

void to_json(Json& j, const ConvergenceReport& v) {
  j = Json{{"policy", v.policy},
           {"dual", v.dual},
           {"v0", v.v0},
           {"zstar", v.zstar ? Json(*v.zstar) : Json(nullptr)},
           {"p", v.p + 1},
           {"horizon", v.horizon},
           {"replications", v.replications},
           {"rows", v.rows},
           {"warnings", v.warnings}};
}
void from_json(const Json& j, ConvergenceReport& v) {
  j.at("policy").get_to(v.policy);
  j.at("dual").get_to(v.dual);
  j.at("v0").get_to(v.v0);
  v.zstar = j.at("zstar").is_null() ? std::nullopt : std::optional(j.at("zstar").get<double>());
  v.p = label(j.at("p"), "/p");
  j.at("horizon").get_to(v.horizon);
  j.at("replications").get_to(v.replications);
  j.at("rows").get_to(v.rows);
  j.at("warnings").get_to(v.warnings);
}

// ----------------------------------------------------------------- config

StreamDistributions Config::resolved_distributions() const {
  return distributions ? *distributions : StreamDistributions::defaults_for(system);
}

Config parse_config(const Json& j) {
  Obj o(j, "");
  Config c;
  if (auto* v = o.find("cases")) {
    if (!v->is_array()) throw ConfigError("/cases", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < v->size(); ++i) {
      c.cases.push_back(parse_case((*v)[i], "/cases/" + std::to_string(i)));
      if (!names.insert(c.cases.back().name).second)
        throw ConfigError("/cases/" + std::to_string(i) + "/name", "duplicate case name");
    }
  }
  if (o.has("system")) c.system = parse_system(*o.find("system"), "/system");
  else if (c.cases.empty()) o.at("system");
  else c.system = c.cases.front().system;
  if (auto* v = o.find("scaling")) {
    Obj s(*v, "/scaling");
    if (auto* m = s.find("m")) c.m_moment = num(*m, "/scaling/m");
    if (!(c.m_moment > 2.0)) throw ConfigError("/scaling/m", "moment order must exceed 2");
    if (s.has("a_bar")) c.a_bar = num(*s.find("a_bar"), "/scaling/a_bar");
    else s.find("a_bar");
    s.finish();
    try {
      ScalingPolicy::make(100.0, c.m_moment, c.a_bar);
    } catch (const ConfigError& e) {
      throw ConfigError("/scaling/a_bar", e.message());
    }
  }
  if (o.has("policy")) c.policy = parse_policy_name(*o.find("policy"), "/policy");
  else o.find("policy");
  if (o.has("distributions")) {
    c.distributions = parse_streams(*o.find("distributions"), "/distributions");
    c.distributions->validate_against(c.system);
  } else {
    o.find("distributions");
  }
  if (auto* v = o.find("simulation")) c.simulation = parse_simulation(*v, "/simulation");
  if (auto* v = o.find("diffusion")) c.diffusion = parse_diffusion(*v, "/diffusion");
  if (auto* v = o.find("ladder")) c.ladder = parse_ladder(*v, "/ladder");
  if (auto* v = o.find("seed")) c.seed = uinteger(*v, "/seed");
  if (auto* v = o.find("output")) {
    Obj out(*v, "/output");
    if (auto* d = out.find("dir")) c.output_dir = str(*d, "/output/dir");
    if (c.output_dir.empty()) throw ConfigError("/output/dir", "must not be empty");
    out.finish();
  }
  o.finish();
  c.ladder.m_moment = c.m_moment;
  c.ladder.a_bar = c.a_bar;
  c.ladder.seed = c.seed;
  // moment requirement for heavy-tailed streams
  const double order = c.resolved_distributions().moment_order();
  if (order <= c.m_moment) throw ConfigError("/distributions", "Pareto shape must exceed the moment order m");
  for (std::size_t i = 0; i < c.cases.size(); ++i)
    if (c.cases[i].distributions && c.cases[i].distributions->moment_order() <= c.m_moment)
      throw ConfigError("/cases/" + std::to_string(i) + "/distributions",
                        "Pareto shape must exceed the moment order m");
  return c;
}

Config parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void to_json(Json& j, const Config& v) {
  Json cases = Json::array();
  for (const auto& c : v.cases) {
    Json e{{"name", c.name}, {"system", c.system}};
    if (c.distributions) e["distributions"] = *c.distributions;
    if (c.policy) e["policy"] = to_string(*c.policy);
    cases.push_back(e);
  }
  Json scaling{{"m", v.m_moment}};
  if (v.a_bar) scaling["a_bar"] = *v.a_bar;
  Json sim = v.simulation.sim;
  sim["n"] = v.simulation.n;
  sim["replications"] = v.simulation.replications;
  const auto& d = v.diffusion;
  Json diff{{"dt", d.dt},
            {"horizon", d.horizon},
            {"z0", d.z0},
            {"paths", d.paths},
            {"reflection", reflection_name(d.reflection)},
            {"sample_period", d.sample_period}};
  const auto& l = v.ladder;
  Json ladder{{"n_values", l.n_values},
              {"replications", l.replications},
              {"horizon", l.horizon},
              {"mode_eps", l.mode_eps},
              {"ks_time", l.ks_time},
              {"ks_limit_paths", l.ks_limit_paths},
              {"replay_checks", l.replay_checks}};
  j = Json{{"system", v.system},     {"scaling", scaling}, {"simulation", sim},
           {"diffusion", diff},      {"ladder", ladder},   {"seed", v.seed},
           {"output", {{"dir", v.output_dir}}}};
  if (v.policy) j["policy"] = to_string(*v.policy);
  if (v.distributions) j["distributions"] = *v.distributions;
  if (!v.cases.empty()) j["cases"] = cases;
}

// ---------------------------------------------------------------- writers

std::string events_ndjson(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    out += Json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<Event> parse_events_ndjson(const std::string& text) {
  std::vector<Event> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Json::parse(line).get<Event>());
  }
  return out;
}

std::string samples_csv(const std::vector<PathSample>& samples) {
  std::string out = "t,x1,x2,xhat1,xhat2,what,ihat1,ihat2,lhat,mode\n";
  for (const auto& s : samples) {
    out += fmt(s.t) + ',' + std::to_string(s.x1) + ',' + std::to_string(s.x2) + ',' + fmt(s.xhat1) +
           ',' + fmt(s.xhat2) + ',' + fmt(s.what) + ',' + fmt(s.ihat1) + ',' + fmt(s.ihat2) + ',' +
           fmt(s.lhat) + ',' + (s.mode == 0 ? "L" : "H") + '\n';
  }
  return out;
}

std::string diffusion_path_csv(const ReflectedPath& path, double sample_period) {
  std::string out = "t,z,l\n";
  std::size_t stride = 1;
  if (sample_period > 0.0)
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_period / path.dt)));
  for (std::size_t j = 0; j < path.z.size(); j += stride)
    out += fmt(path.time(j)) + ',' + fmt(path.z[j]) + ',' + fmt(path.l[j]) + '\n';
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace hts
