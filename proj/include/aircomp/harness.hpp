#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aircomp/config.hpp"

namespace aircomp {

struct ResultRow {
  std::string scenario;
  double sweep_value = 0.0;
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  MseBreakdown mse;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;  // seconds; 0 unless output.timing is set
};

struct SummaryRow {
  double sweep_value = 0.0;
  std::string method;
  double mean = 0.0;
  double stderr_mean = 0.0;
  int n = 0;       // rows with a finite MSE
  int failed = 0;  // rows without one
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

// Seed of one (sweep point, trial) cell. Channel, self-interference and solver
// streams are derived from it with tags 0, 1 and 2.
std::uint64_t trial_seed(std::uint64_t base, std::size_t point_index, int trial);

// One row per configured method. Solver failures are recorded as
// converged = false with NaN MSE fields.
std::vector<ResultRow> run_point(const ExperimentConfig& cfg, std::size_t point_index, int trial);

// threads <= 0 picks sweep_threads().
SweepResult run_sweep(const ExperimentConfig& cfg, int threads = 0);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

// AIRCOMP_THREADS if set to a positive integer, else hardware concurrency.
int sweep_threads();

std::string format_double(double v);
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
// Writes cfg.output_path and <stem>_summary.csv next to it. Throws std::runtime_error on I/O failure.
void write_outputs(const ExperimentConfig& cfg, const SweepResult& result);
std::string summary_path(const std::string& csv_path);

inline constexpr const char* kCsvHeader =
    "scenario,sweep_value,method,trial,seed,mse_total,misalignment,ris_noise,ap_noise,"
    "iterations,converged,wall_time";

}  // namespace aircomp
