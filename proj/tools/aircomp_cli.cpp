// Command-line front end: single instances, sweeps and the asymptotic formulas.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aircomp/asymptotics.hpp"
#include "aircomp/harness.hpp"

using namespace aircomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

struct InstanceArgs {
  int K = 4, M = 4, N = 16;
  double noise_db = -100.0;
  double user_power_db = 0.0;
  double ris_power_db = 0.0;
  double eta_db = -40.0;
  bool passive = false;
};

struct GlobalArgs {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::optional<int> trials;
  bool quiet = false;
};

void print_breakdown(const char* label, const MseBreakdown& b) {
  std::printf("%-14s total=%.10e  misalignment=%.6e  ris_noise=%.6e  ap_noise=%.6e\n", label,
              b.total, b.misalignment, b.ris_noise, b.ap_noise);
}

void print_trace(const SolveTrace& t) {
  std::printf("iter  mse_after_m       mse_after_b       mse_after_phi     ris_power\n");
  std::printf("%4d  %-16s  %-16s  %.10e\n", 0, "-", "-", t.initial_mse);
  for (int i = 0; i < t.iterations(); ++i) {
    const auto& s = t.steps[i];
    std::printf("%4d  %.10e  %.10e  %.10e  %.6e\n", i + 1, s.mse_after_m, s.mse_after_b,
                s.mse_after_phi, s.ris_power);
  }
  std::printf("converged: %s after %d iterations\n", t.converged ? "yes" : "no", t.iterations());
}

// Instance settings come from --config when given, else from the flags.
ExperimentConfig instance_config(const GlobalArgs& g, const InstanceArgs& a) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = load_config(g.config).at_point(0);
  } else {
    cfg = default_config(Scenario::Custom);
    cfg.geometry.K = a.K;
    cfg.geometry.M = a.M;
    cfg.geometry.N = a.N;
    cfg.budget.noise_db = a.noise_db;
    cfg.budget.user_power_db = a.user_power_db;
    cfg.budget.ris_power_db = a.ris_power_db;
    cfg.stats.eta_db = a.eta_db;
    cfg.validate();
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

int cmd_solve(const GlobalArgs& g, const InstanceArgs& a) {
  const ExperimentConfig cfg = instance_config(g, a);
  const ChannelSet ch = gen_channels(cfg.geometry, cfg.fading, derive_seed(cfg.seed, 0));
  SolverOptions opts = cfg.solver;
  opts.seed = derive_seed(cfg.seed, 2);
  const SolveResult r = a.passive ? passive_ao_solve(ch, cfg.passive_budget(), opts)
                                  : ao_solve(ch, cfg.active_budget(), opts);
  std::printf("K=%d M=%d N=%d noise=%.1f dB seed=%llu (%s RIS)\n", ch.K(), ch.M(), ch.N(),
              cfg.budget.noise_db, static_cast<unsigned long long>(cfg.seed),
              a.passive ? "passive" : "active");
  if (!g.quiet) print_trace(r.trace);
  print_breakdown("MSE", r.breakdown);
  return kExitOk;
}

int cmd_selfint(const GlobalArgs& g, const InstanceArgs& a) {
  const ExperimentConfig cfg = instance_config(g, a);
  ChannelSet ch = gen_channels(cfg.geometry, cfg.fading, derive_seed(cfg.seed, 0));
  SolverOptions opts = cfg.solver;
  opts.seed = derive_seed(cfg.seed, 2);
  const PowerBudget budget = cfg.active_budget();

  const SolveResult ideal = ao_solve(ch, budget, opts);
  ch.H_si = gen_si_channel(ch.N(), cfg.eta_sq(), derive_seed(cfg.seed, 1));
  const MseBreakdown baseline =
      mse_general(ideal.state, ch, budget, effective_phi_si(ideal.state.phi, *ch.H_si));
  const SolveResult suppressed = ao_solve_si(ch, budget, opts, cfg.schedule);

  std::printf("K=%d M=%d N=%d noise=%.1f dB eta=%.1f dB seed=%llu\n", ch.K(), ch.M(), ch.N(),
              cfg.budget.noise_db, cfg.stats.eta_db, static_cast<unsigned long long>(cfg.seed));
  if (!g.quiet) print_trace(suppressed.trace);
  print_breakdown("ideal", ideal.breakdown);
  print_breakdown("no_suppress", baseline);
  print_breakdown("suppressed", suppressed.breakdown);
  return kExitOk;
}

int cmd_sweep(const GlobalArgs& g) {
  if (g.config.empty()) throw ConfigError("sweep requires --config <path>");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.trials) cfg.trials = *g.trials;
  if (!g.out.empty()) cfg.output_path = g.out;
  cfg.validate();
  const SweepResult r = run_sweep(cfg);
  write_outputs(cfg, r);
  if (!g.quiet) {
    std::printf("%-14s %-22s %-24s %-12s %s\n", "sweep_value", "method", "mean_mse", "stderr", "n");
    for (const auto& s : r.summary)
      std::printf("%-14g %-22s %-24.10e %-12.3e %d%s\n", s.sweep_value, s.method.c_str(), s.mean,
                  s.stderr_mean, s.n, s.failed ? " (failures)" : "");
  }
  std::printf("wrote %zu rows to %s\n", r.rows.size(), cfg.output_path.c_str());
  return kExitOk;
}

int cmd_asymptotic(const AsymptoticParams& p) {
  p.validate();
  std::printf("N=%d K=%d P0=%g W P0_passive=%g W P_r=%g W\n", p.N, p.K, p.P0, p.P0_passive, p.P_r);
  std::printf("sigma_a2=%g sigma_r2=%g rho_r2=%g rho_g2=%g\n", p.sigma_a2, p.sigma_r2, p.rho_r2,
              p.rho_g2);
  std::printf("su-siso active  MSE = %.6e\n", mse_active_susiso(p));
  std::printf("su-siso passive MSE = %.6e\n", mse_passive_susiso(p));
  std::printf("su-siso N_th        = %.6g\n", n_threshold_susiso(p));
  std::printf("mu-simo active  MSE = %.6e\n", mse_active_musimo(p));
  std::printf("mu-simo passive MSE = %.6e\n", mse_passive_musimo(p));
  std::printf("mu-simo N_th        = %.6g\n", n_threshold_musimo(p));
  return kExitOk;
}

void add_instance_flags(CLI::App* cmd, InstanceArgs& a) {
  cmd->add_option("--K", a.K, "users")->check(CLI::PositiveNumber);
  cmd->add_option("--M", a.M, "AP antennas")->check(CLI::PositiveNumber);
  cmd->add_option("--N", a.N, "RIS elements")->check(CLI::PositiveNumber);
  cmd->add_option("--noise-db", a.noise_db, "sigma_a^2 = sigma_r^2 (dB)");
  cmd->add_option("--user-power-db", a.user_power_db, "per-user power (dBW)");
  cmd->add_option("--ris-power-db", a.ris_power_db, "RIS power (dBW)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-RIS over-the-air computation: MSE design and sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--config", g.config, "config file");
  app.add_option("--out", g.out, "output CSV path (sweep)");
  app.add_option("--trials", g.trials, "trials per sweep point")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "suppress traces and tables");

  InstanceArgs solve_args, si_args;
  auto* solve = app.add_subcommand("solve", "run the AO design on one channel draw");
  add_instance_flags(solve, solve_args);
  solve->add_flag("--passive", solve_args.passive, "passive RIS baseline");

  auto* sweep = app.add_subcommand("sweep", "run a config file and write CSV");

  AsymptoticParams ap = AsymptoticParams::reference();
  ap.N = 1024;
  ap.K = 20;
  double sa_db = -100.0, sr_db = -100.0, rr_db = -70.0, rg_db = -70.0;
  auto* asym = app.add_subcommand("asymptotic", "evaluate the large-N formulas and thresholds");
  asym->add_option("--N", ap.N, "RIS elements")->check(CLI::PositiveNumber);
  asym->add_option("--K", ap.K, "users (MU-SIMO)")->check(CLI::PositiveNumber);
  asym->add_option("--P0", ap.P0, "per-user power, active (W)");
  asym->add_option("--P0-passive", ap.P0_passive, "per-user power, passive (W)");
  asym->add_option("--Pr", ap.P_r, "RIS power (W)");
  asym->add_option("--sigma-a-db", sa_db, "AP noise (dB)");
  asym->add_option("--sigma-r-db", sr_db, "RIS noise (dB)");
  asym->add_option("--rho-r-db", rr_db, "user-RIS variance (dB)");
  asym->add_option("--rho-g-db", rg_db, "RIS-AP variance (dB)");

  auto* selfint = app.add_subcommand("selfint", "one instance with and without SI suppression");
  add_instance_flags(selfint, si_args);
  selfint->add_option("--eta-db", si_args.eta_db, "self-interference factor (dB)");
  si_args.N = 16;

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(g, solve_args);
    if (*selfint) return cmd_selfint(g, si_args);
    if (*sweep) return cmd_sweep(g);
    if (*asym) {
      ap.sigma_a2 = db_to_linear(sa_db);
      ap.sigma_r2 = db_to_linear(sr_db);
      ap.rho_r2 = db_to_linear(rr_db);
      ap.rho_g2 = db_to_linear(rg_db);
      return cmd_asymptotic(ap);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitConfig;
}
