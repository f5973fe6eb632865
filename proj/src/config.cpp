#include "aircomp/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace aircomp {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// Accepts "inf" and "-inf" as well as ordinary numbers.
double parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError("expected a number, got an empty value");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || std::isnan(v))
    throw ConfigError("expected a number, got '" + t + "'");
  return v;
}

double parse_finite(const std::string& s) {
  const double v = parse_double(s);
  if (!std::isfinite(v)) throw ConfigError("expected a finite number, got '" + trim(s) + "'");
  return v;
}

long long parse_integer(const std::string& s) {
  const std::string t = trim(s);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError("expected an integer, got '" + t + "'");
  return v;
}

int parse_int(const std::string& s) {
  const long long v = parse_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError("integer out of range: " + trim(s));
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& s) {
  const std::string t = trim(s);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError("expected a non-negative integer seed, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("expected true/false, got '" + t + "'");
}

Point3 parse_point(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw ConfigError("expected x, y, z");
  return {parse_finite(parts[0]), parse_finite(parts[1]), parse_finite(parts[2])};
}

std::array<double, 2> parse_range(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError("expected lo, hi");
  return {parse_finite(parts[0]), parse_finite(parts[1])};
}

// Rician factor in dB; -inf gives pure Rayleigh.
double kappa_from_db(const std::string& s) {
  const double db = parse_double(s);
  if (db == std::numeric_limits<double>::infinity()) return kPureLosKappa;
  return db_to_linear(db);
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"scenario", [](ExperimentConfig&, const std::string&) {}},
      {"geometry.K", [](ExperimentConfig& c, const std::string& v) { c.geometry.K = parse_int(v); }},
      {"geometry.M", [](ExperimentConfig& c, const std::string& v) { c.geometry.M = parse_int(v); }},
      {"geometry.N", [](ExperimentConfig& c, const std::string& v) { c.geometry.N = parse_int(v); }},
      {"geometry.ap", [](ExperimentConfig& c, const std::string& v) { c.geometry.ap_position = parse_point(v); }},
      {"geometry.ris", [](ExperimentConfig& c, const std::string& v) { c.geometry.ris_position = parse_point(v); }},
      {"geometry.user_x", [](ExperimentConfig& c, const std::string& v) { c.geometry.user_x = parse_range(v); }},
      {"geometry.user_y", [](ExperimentConfig& c, const std::string& v) { c.geometry.user_y = parse_range(v); }},
      {"geometry.user_z", [](ExperimentConfig& c, const std::string& v) { c.geometry.user_z = parse_finite(v); }},
      {"fading.ref_loss_db",
       [](ExperimentConfig& c, const std::string& v) { c.fading.ref_gain = db_to_linear(-parse_finite(v)); }},
      {"fading.ref_distance", [](ExperimentConfig& c, const std::string& v) { c.fading.ref_distance = parse_finite(v); }},
      {"fading.exp_user_ris", [](ExperimentConfig& c, const std::string& v) { c.fading.exp_user_ris = parse_finite(v); }},
      {"fading.exp_user_ap", [](ExperimentConfig& c, const std::string& v) { c.fading.exp_user_ap = parse_finite(v); }},
      {"fading.exp_ris_ap", [](ExperimentConfig& c, const std::string& v) { c.fading.exp_ris_ap = parse_finite(v); }},
      {"fading.kappa_user_ris_db", [](ExperimentConfig& c, const std::string& v) { c.fading.kappa_user_ris = kappa_from_db(v); }},
      {"fading.kappa_user_ap_db", [](ExperimentConfig& c, const std::string& v) { c.fading.kappa_user_ap = kappa_from_db(v); }},
      {"fading.kappa_ris_ap_db", [](ExperimentConfig& c, const std::string& v) { c.fading.kappa_ris_ap = kappa_from_db(v); }},
      {"budget.user_power_db", [](ExperimentConfig& c, const std::string& v) { c.budget.user_power_db = parse_finite(v); }},
      {"budget.passive_user_power_db",
       [](ExperimentConfig& c, const std::string& v) { c.budget.passive_user_power_db = parse_finite(v); }},
      {"budget.ris_power_db", [](ExperimentConfig& c, const std::string& v) { c.budget.ris_power_db = parse_finite(v); }},
      {"budget.noise_db", [](ExperimentConfig& c, const std::string& v) { c.budget.noise_db = parse_finite(v); }},
      {"budget.ap_noise_db", [](ExperimentConfig& c, const std::string& v) { c.budget.ap_noise_db = parse_finite(v); }},
      {"budget.ris_noise_db", [](ExperimentConfig& c, const std::string& v) { c.budget.ris_noise_db = parse_finite(v); }},
      {"channel.rho_r_db", [](ExperimentConfig& c, const std::string& v) { c.stats.rho_r_db = parse_finite(v); }},
      {"channel.rho_g_db", [](ExperimentConfig& c, const std::string& v) { c.stats.rho_g_db = parse_finite(v); }},
      {"channel.eta_db", [](ExperimentConfig& c, const std::string& v) { c.stats.eta_db = parse_double(v); }},
      {"sweep.variable", [](ExperimentConfig& c, const std::string& v) { c.sweep.variable = trim(v); }},
      {"sweep.values",
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep.values.clear();
         if (trim(v).empty()) return;
         for (const auto& item : split(v, ',')) c.sweep.values.push_back(parse_double(item));
       }},
      {"run.trials", [](ExperimentConfig& c, const std::string& v) { c.trials = parse_int(v); }},
      {"run.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_seed(v); }},
      {"run.methods",
       [](ExperimentConfig& c, const std::string& v) {
         c.methods.clear();
         for (const auto& item : split(v, ','))
           if (!item.empty()) c.methods.push_back(item);
       }},
      {"solver.max_outer_iters", [](ExperimentConfig& c, const std::string& v) { c.solver.max_outer_iters = parse_int(v); }},
      {"solver.outer_tol", [](ExperimentConfig& c, const std::string& v) { c.solver.outer_tol = parse_finite(v); }},
      {"solver.bisect_tol", [](ExperimentConfig& c, const std::string& v) { c.solver.bisect_tol = parse_finite(v); }},
      {"solver.max_bisect_iters", [](ExperimentConfig& c, const std::string& v) { c.solver.max_bisect_iters = parse_int(v); }},
      {"solver.b_dual_tol", [](ExperimentConfig& c, const std::string& v) { c.solver.b_dual_tol = parse_finite(v); }},
      {"schedule.tau0", [](ExperimentConfig& c, const std::string& v) { c.schedule.tau0 = parse_finite(v); }},
      {"schedule.tau0_scale", [](ExperimentConfig& c, const std::string& v) { c.schedule.tau0_scale = parse_finite(v); }},
      {"schedule.growth", [](ExperimentConfig& c, const std::string& v) { c.schedule.growth = parse_finite(v); }},
      {"schedule.inner_tol", [](ExperimentConfig& c, const std::string& v) { c.schedule.inner_tol = parse_finite(v); }},
      {"schedule.max_inner_iters",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.max_inner_iters = parse_int(v); }},
      {"output.path", [](ExperimentConfig& c, const std::string& v) { c.output_path = trim(v); }},
      {"output.timing", [](ExperimentConfig& c, const std::string& v) { c.timing = parse_bool(v); }},
  };
  return table;
}

const std::vector<std::string> kSweepVariables = {"none",   "noise_db",      "N",
                                                  "K",      "M",             "eta_db",
                                                  "user_power_db", "ris_power_db"};

bool uses_geometry(Scenario s) {
  return s == Scenario::Fig2NoiseSweep || s == Scenario::Fig5SiEta || s == Scenario::Custom;
}

int as_count(double v, const std::string& what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
    throw ConfigError("sweep value for " + what + " must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

Scenario parse_scenario(const std::string& name) {
  const std::string t = trim(name);
  if (t == "fig2_noise_sweep") return Scenario::Fig2NoiseSweep;
  if (t == "fig3_susiso_N") return Scenario::Fig3SusisoN;
  if (t == "fig4_musimo_N") return Scenario::Fig4MusimoN;
  if (t == "fig5_si_eta") return Scenario::Fig5SiEta;
  if (t == "custom") return Scenario::Custom;
  throw ConfigError("unknown scenario '" + t + "'");
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Fig2NoiseSweep: return "fig2_noise_sweep";
    case Scenario::Fig3SusisoN: return "fig3_susiso_N";
    case Scenario::Fig4MusimoN: return "fig4_musimo_N";
    case Scenario::Fig5SiEta: return "fig5_si_eta";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

std::vector<std::string> valid_methods(Scenario s) {
  if (uses_geometry(s)) return {"active_ao", "passive_ao", "si_baseline", "si_suppressed"};
  return {"active_closed_form", "passive_closed_form", "asymptotic_active", "asymptotic_passive",
          "active_ao", "passive_ao"};
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [key, fn] : setters()) out.push_back(key);
    return out;
  }();
  return keys;
}

ExperimentConfig default_config(Scenario s) {
  ExperimentConfig c;
  c.scenario = s;
  switch (s) {
    case Scenario::Fig2NoiseSweep:
      c.geometry.K = 20;
      c.geometry.M = 10;
      c.geometry.N = 200;
      c.sweep = {"noise_db", {-120, -110, -100, -90, -80, -70, -60, -50, -40}};
      c.trials = 10;
      c.methods = {"active_ao", "passive_ao"};
      c.output_path = "fig2.csv";
      break;
    case Scenario::Fig3SusisoN:
      c.geometry.K = 1;
      c.geometry.M = 1;
      c.sweep = {"N", {64, 256, 1024, 4096}};
      c.trials = 200;
      c.methods = {"active_closed_form", "passive_closed_form", "asymptotic_active",
                   "asymptotic_passive"};
      c.output_path = "fig3.csv";
      break;
    case Scenario::Fig4MusimoN:
      c.geometry.K = 20;
      c.sweep = {"N", {64, 128, 256}};
      c.trials = 20;
      c.methods = {"active_closed_form", "passive_closed_form", "asymptotic_active",
                   "asymptotic_passive"};
      c.output_path = "fig4.csv";
      break;
    case Scenario::Fig5SiEta:
      c.geometry.K = 20;
      c.geometry.M = 10;
      c.geometry.N = 64;
      c.budget.noise_db = -80.0;
      c.sweep = {"eta_db", {-60, -55, -50, -45, -40, -35, -30}};
      c.trials = 10;
      c.methods = {"active_ao", "si_baseline", "si_suppressed"};
      c.schedule.tau0_scale = 0.3;
      c.schedule.inner_tol = 3e-3;
      c.output_path = "fig5.csv";
      break;
    case Scenario::Custom:
      c.geometry.K = 4;
      c.geometry.M = 4;
      c.geometry.N = 16;
      c.methods = {"active_ao"};
      break;
  }
  if (s == Scenario::Fig4MusimoN) c.geometry.M = c.geometry.N;
  return c;
}

void ExperimentConfig::validate() const {
  try {
    geometry.validate();
    fading.validate();
    solver.validate();
    schedule.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (trials < 1) throw ConfigError("run.trials must be >= 1");
  if (std::find(kSweepVariables.begin(), kSweepVariables.end(), sweep.variable) == kSweepVariables.end())
    throw ConfigError("unknown sweep.variable '" + sweep.variable + "'");
  if (sweep.values.empty()) throw ConfigError("sweep.values must not be empty");
  for (std::size_t i = 1; i < sweep.values.size(); ++i)
    if (!(sweep.values[i] > sweep.values[i - 1]))
      throw ConfigError("sweep.values must be strictly increasing");
  for (double v : sweep.values)
    if (std::isnan(v) || (sweep.variable != "eta_db" && !std::isfinite(v)))
      throw ConfigError("sweep.values must be finite (only eta_db accepts -inf)");
  if (sweep.variable == "none" && sweep.values.size() != 1)
    throw ConfigError("sweep.variable = none takes exactly one value");
  if (methods.empty()) throw ConfigError("run.methods must not be empty");
  const auto allowed = valid_methods(scenario);
  for (const auto& m : methods) {
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
      throw ConfigError("method '" + m + "' is not available for scenario " + scenario_name(scenario));
    if (std::count(methods.begin(), methods.end(), m) > 1)
      throw ConfigError("method '" + m + "' listed twice");
  }
  if (scenario == Scenario::Fig3SusisoN && (geometry.K != 1 || geometry.M != 1))
    throw ConfigError("fig3_susiso_N requires geometry.K = geometry.M = 1");
  if (scenario == Scenario::Fig3SusisoN && (sweep.variable == "K" || sweep.variable == "M"))
    throw ConfigError("fig3_susiso_N cannot sweep K or M");
  if (scenario == Scenario::Fig4MusimoN && sweep.variable == "M")
    throw ConfigError("fig4_musimo_N ties M to N; sweep N instead");
  if (!(stats.eta_db < std::numeric_limits<double>::infinity()))
    throw ConfigError("channel.eta_db must be below +inf");
  if (output_path.empty()) throw ConfigError("output.path must not be empty");
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const auto p = at_point(i);
    try {
      p.geometry.validate();
      p.active_budget().validate(p.geometry.K);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("sweep point ") + std::to_string(i) + ": " + e.what());
    }
  }
}

ExperimentConfig ExperimentConfig::at_point(std::size_t index) const {
  if (index >= sweep.values.size()) throw ConfigError("sweep index out of range");
  ExperimentConfig c = *this;
  const double v = sweep.values[index];
  const std::string& var = sweep.variable;
  if (var == "noise_db") {
    c.budget.noise_db = v;
  } else if (var == "N") {
    c.geometry.N = as_count(v, "N");
  } else if (var == "K") {
    c.geometry.K = as_count(v, "K");
  } else if (var == "M") {
    c.geometry.M = as_count(v, "M");
  } else if (var == "eta_db") {
    c.stats.eta_db = v;
  } else if (var == "user_power_db") {
    c.budget.user_power_db = v;
  } else if (var == "ris_power_db") {
    c.budget.ris_power_db = v;
  }
  if (c.scenario == Scenario::Fig4MusimoN) c.geometry.M = c.geometry.N;
  return c;
}

PowerBudget ExperimentConfig::active_budget() const {
  PowerBudget b;
  b.P = RVec::Constant(geometry.K, db_to_linear(budget.user_power_db));
  b.P_r = db_to_linear(budget.ris_power_db);
  b.sigma_a2 = db_to_linear(budget.ap_noise_db.value_or(budget.noise_db));
  b.sigma_r2 = db_to_linear(budget.ris_noise_db.value_or(budget.noise_db));
  return b;
}

PowerBudget ExperimentConfig::passive_budget() const {
  PowerBudget b = active_budget();
  b.P.setConstant(db_to_linear(budget.passive_user_power_db));
  b.sigma_r2 = 0.0;
  return b;
}

double ExperimentConfig::eta_sq() const {
  const double eta = db_to_linear(stats.eta_db);
  return eta * eta;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    const auto& table = setters();
    const bool known = std::any_of(table.begin(), table.end(),
                                   [&](const auto& kv) { return kv.first == key; });
    if (!known) throw ConfigError(where + "unknown key '" + key + "'");
    if (entries.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    entries[key] = {value, line_no};
  }

  Scenario scenario = Scenario::Custom;
  if (auto it = entries.find("scenario"); it != entries.end()) {
    try {
      scenario = parse_scenario(it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(it->second.line) + ": " + e.what());
    }
  }
  ExperimentConfig cfg = default_config(scenario);
  for (const auto& [key, setter] : setters()) {
    auto it = entries.find(key);
    if (it == entries.end()) continue;
    try {
      setter(cfg, it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(it->second.line) + ": " + key + ": " + e.what());
    }
  }
  if (scenario == Scenario::Fig4MusimoN) cfg.geometry.M = cfg.geometry.N;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

}  // namespace aircomp
