#include "aircomp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "aircomp/asymptotics.hpp"

namespace aircomp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MseBreakdown failed_breakdown() { return {kNaN, kNaN, kNaN, kNaN}; }

MseBreakdown total_only(double total) { return {kNaN, kNaN, kNaN, total}; }

AsymptoticParams asymptotic_params(const ExperimentConfig& c) {
  const PowerBudget active = c.active_budget();
  AsymptoticParams p;
  p.N = c.geometry.N;
  p.K = c.geometry.K;
  p.P0 = active.P(0);
  p.P0_passive = db_to_linear(c.budget.passive_user_power_db);
  p.P_r = active.P_r;
  p.sigma_a2 = active.sigma_a2;
  p.sigma_r2 = active.sigma_r2;
  p.rho_r2 = db_to_linear(c.stats.rho_r_db);
  p.rho_g2 = db_to_linear(c.stats.rho_g_db);
  return p;
}

struct Outcome {
  MseBreakdown mse;
  int iterations = 0;
  bool converged = true;
};

Outcome from_solve(const SolveResult& r) {
  return {r.breakdown, r.trace.iterations(), r.trace.converged};
}

// Lazily evaluated per-trial context shared by the methods of one row group.
class TrialContext {
 public:
  TrialContext(const ExperimentConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    opts_ = cfg.solver;
    opts_.seed = derive_seed(seed, 2);
  }

  Outcome run(const std::string& method) {
    switch (cfg_.scenario) {
      case Scenario::Fig3SusisoN: return run_susiso(method);
      case Scenario::Fig4MusimoN: return run_musimo(method);
      default: return run_geometry(method);
    }
  }

 private:
  const ChannelSet& channels() {
    if (!channels_) {
      const std::uint64_t s = derive_seed(seed_, 0);
      const Geometry& g = cfg_.geometry;
      if (cfg_.scenario == Scenario::Fig3SusisoN || cfg_.scenario == Scenario::Fig4MusimoN)
        channels_ = gen_rayleigh_channels(g.M, g.N, g.K, db_to_linear(cfg_.stats.rho_r_db),
                                          db_to_linear(cfg_.stats.rho_g_db), s);
      else
        channels_ = gen_channels(g, cfg_.fading, s);
    }
    return *channels_;
  }

  const ChannelSet& si_channels() {
    if (!si_channels_) {
      si_channels_ = channels();
      si_channels_->H_si = gen_si_channel(cfg_.geometry.N, cfg_.eta_sq(), derive_seed(seed_, 1));
    }
    return *si_channels_;
  }

  const SolveResult& ideal() {
    if (!ideal_) ideal_ = ao_solve(channels(), cfg_.active_budget(), opts_);
    return *ideal_;
  }

  Outcome run_ao(const std::string& method) {
    if (method == "active_ao") return from_solve(ideal());
    return from_solve(passive_ao_solve(channels(), cfg_.passive_budget(), opts_));
  }

  Outcome run_geometry(const std::string& method) {
    if (method == "active_ao" || method == "passive_ao") return run_ao(method);
    if (method == "si_baseline") {
      const SolveResult& r = ideal();
      const ChannelSet& ch = si_channels();
      Outcome o = from_solve(r);
      o.mse = mse_general(r.state, ch, cfg_.active_budget(), effective_phi_si(r.state.phi, *ch.H_si));
      return o;
    }
    if (method == "si_suppressed")
      return from_solve(ao_solve_si(si_channels(), cfg_.active_budget(), opts_, cfg_.schedule));
    throw ConfigError("unsupported method " + method);
  }

  Outcome run_susiso(const std::string& method) {
    const AsymptoticParams p = asymptotic_params(cfg_);
    if (method == "asymptotic_active") return {total_only(mse_active_susiso(p)), 0, true};
    if (method == "asymptotic_passive") return {total_only(mse_passive_susiso(p)), 0, true};
    if (method == "active_ao" || method == "passive_ao") return run_ao(method);
    const bool active = method == "active_closed_form";
    const ChannelSet& ch = channels();
    const CVec h_r = ch.H_r.col(0);
    const CVec g = ch.G.row(0).adjoint();
    const SusisoSolution sol = susiso_closed_form(h_r, g, p, active);
    const PowerBudget budget = susiso_budget(p, active);
    BeamState s;
    s.b = CVec::Constant(1, sol.b);
    s.phi = sol.phi();
    s.m = update_m(equivalent_channels(ch, s.phi), s.b, ch.G, s.phi, budget);
    return {mse(s, ch, budget), 0, true};
  }

  Outcome run_musimo(const std::string& method) {
    const AsymptoticParams p = asymptotic_params(cfg_);
    if (method == "asymptotic_active") return {total_only(mse_active_musimo(p)), 0, true};
    if (method == "asymptotic_passive") return {total_only(mse_passive_musimo(p)), 0, true};
    if (method == "active_ao" || method == "passive_ao") return run_ao(method);
    const bool active = method == "active_closed_form";
    const ChannelSet& ch = channels();
    const BeamState s = active ? musimo_asymptotic_config(ch, p, opts_.seed)
                               : musimo_passive_config(ch, p, opts_.seed);
    return {mse(s, ch, musimo_budget(p, active)), 0, true};
  }

  const ExperimentConfig& cfg_;
  std::uint64_t seed_;
  SolverOptions opts_;
  std::optional<ChannelSet> channels_;
  std::optional<ChannelSet> si_channels_;
  std::optional<SolveResult> ideal_;
};

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, std::size_t point_index, int trial) {
  return derive_seed(base, point_index, static_cast<std::uint64_t>(trial));
}

std::vector<ResultRow> run_point(const ExperimentConfig& cfg, std::size_t point_index, int trial) {
  const ExperimentConfig point = cfg.at_point(point_index);
  const std::uint64_t seed = trial_seed(cfg.seed, point_index, trial);
  TrialContext ctx(point, seed);
  std::vector<ResultRow> rows;
  for (const auto& method : cfg.methods) {
    ResultRow row;
    row.scenario = scenario_name(cfg.scenario);
    row.sweep_value = cfg.sweep.values[point_index];
    row.method = method;
    row.trial = trial;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome o = ctx.run(method);
      row.mse = o.mse;
      row.iterations = o.iterations;
      row.converged = o.converged && std::isfinite(o.mse.total);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      row.mse = failed_breakdown();
      row.converged = false;
    }
    if (cfg.timing)
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

int sweep_threads() {
  if (const char* env = std::getenv("AIRCOMP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t points = cfg.sweep.values.size();
  const std::size_t cells = points * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<ResultRow>> results(cells);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      try {
        results[i] = run_point(cfg, i / cfg.trials, static_cast<int>(i % cfg.trials));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::clamp<int>(threads > 0 ? threads : sweep_threads(), 1,
                                static_cast<int>(std::max<std::size_t>(cells, 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  SweepResult out;
  for (auto& cell : results)
    for (auto& row : cell) out.rows.push_back(std::move(row));
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
    if (a.method != b.method) return a.method < b.method;
    return a.trial < b.trial;
  });
  out.summary = summarize(out.rows);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::pair<double, std::string>, std::vector<double>> groups;
  std::map<std::pair<double, std::string>, int> failures;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.sweep_value, r.method);
    auto& g = groups[key];
    if (std::isfinite(r.mse.total))
      g.push_back(r.mse.total);
    else
      ++failures[key];
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow s;
    s.sweep_value = key.first;
    s.method = key.second;
    s.n = static_cast<int>(values.size());
    s.failed = failures[key];
    if (s.n == 0) {
      s.mean = s.stderr_mean = kNaN;
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / s.n;
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.stderr_mean = s.n > 1 ? std::sqrt(ss / (s.n - 1) / s.n) : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << format_double(r.sweep_value) << ',' << r.method << ',' << r.trial
        << ',' << r.seed << ',' << format_double(r.mse.total) << ','
        << format_double(r.mse.misalignment) << ',' << format_double(r.mse.ris_noise) << ','
        << format_double(r.mse.ap_noise) << ',' << r.iterations << ','
        << (r.converged ? "true" : "false") << ',' << format_double(r.wall_time) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "sweep_value,method,mean_mse,stderr,n,failed\n";
  for (const auto& s : rows)
    out << format_double(s.sweep_value) << ',' << s.method << ',' << format_double(s.mean) << ','
        << format_double(s.stderr_mean) << ',' << s.n << ',' << s.failed << '\n';
}

std::string summary_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  const std::string name = p.stem().string() + "_summary" + p.extension().string();
  return (p.parent_path() / name).string();
}

void write_outputs(const ExperimentConfig& cfg, const SweepResult& result) {
  auto write = [](const std::string& path, const std::function<void(std::ostream&)>& body) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
  };
  write(cfg.output_path, [&](std::ostream& o) { write_csv(o, result.rows); });
  write(summary_path(cfg.output_path), [&](std::ostream& o) { write_summary_csv(o, result.summary); });
}

}  // namespace aircomp
