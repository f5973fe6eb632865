#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aircomp/channel_model.hpp"
#include "aircomp/si_solver.hpp"

namespace aircomp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Fig2NoiseSweep, Fig3SusisoN, Fig4MusimoN, Fig5SiEta, Custom };

Scenario parse_scenario(const std::string& name);
const char* scenario_name(Scenario s);

// Powers and noise levels in dB (dBW for powers); converted once in budget().
struct BudgetDb {
  double user_power_db = 0.0;
  double passive_user_power_db = 3.010299956639812;  // 2 W
  double ris_power_db = 0.0;
  double noise_db = -100.0;  // sigma_a2 = sigma_r2 unless overridden below
  std::optional<double> ap_noise_db;
  std::optional<double> ris_noise_db;
};

// Channel statistics used by the Rayleigh and self-interference scenarios.
struct ChannelStatsDb {
  double rho_r_db = -70.0;
  double rho_g_db = -70.0;
  double eta_db = -std::numeric_limits<double>::infinity();  // SI factor; variance eta^2
};

// Quantity varied across a sweep: noise_db, N, K, M, eta_db, user_power_db,
// ris_power_db, or none (single point).
struct Sweep {
  std::string variable = "none";
  std::vector<double> values{0.0};
};

struct ExperimentConfig {
  Scenario scenario = Scenario::Custom;
  Geometry geometry;
  FadingParams fading;
  BudgetDb budget;
  ChannelStatsDb stats;
  Sweep sweep;
  int trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  SolverOptions solver;
  PenaltySchedule schedule;
  std::string output_path = "results.csv";
  bool timing = false;

  // Throws ConfigError.
  void validate() const;
  // Copy with the sweep variable set to values[index].
  ExperimentConfig at_point(std::size_t index) const;
  PowerBudget active_budget() const;
  PowerBudget passive_budget() const;
  double eta_sq() const;
};

// Per-scenario geometry, sweep grid and method list.
ExperimentConfig default_config(Scenario s);

// Flat "key = value" text, '#' starts a comment. Unknown or repeated keys are
// errors. `origin` names the source in messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// Keys accepted by parse_config, in documentation order.
const std::vector<std::string>& config_keys();

std::vector<std::string> valid_methods(Scenario s);

}  // namespace aircomp
