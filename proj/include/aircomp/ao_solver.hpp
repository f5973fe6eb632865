#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aircomp/mse.hpp"

namespace aircomp {

struct SolverOptions {
  int max_outer_iters = 200;
  double outer_tol = 1e-8;    // relative MSE change between outer iterations
  double bisect_tol = 1e-10;  // relative constraint residual of multiplier searches
  int max_bisect_iters = 200;
  double b_dual_tol = 1e-12;  // relative residual of the coupled RIS-power constraint in update_b
  std::uint64_t seed = 0;     // RIS phase initialization

  void validate() const;
};

// min phi^H A phi - 2 Re(v^H phi) + offset   s.t.  phi^H B phi <= P
struct QcqpProblem {
  CMat A;  // Hermitian PSD
  CMat B;  // Hermitian PD
  CVec v;
  double P = 0.0;
  double offset = 0.0;  // constant term; objective() reproduces the source expression

  // Optional structure A = diag(A_diag) + A_factor A_factor^H. When set and B is
  // diagonal the solver works in O(N r^2) per multiplier instead of O(N^3).
  std::optional<CMat> A_factor;
  RVec A_diag;

  void validate() const;
  double objective(const CVec& phi) const;
  double constraint(const CVec& phi) const;
};

struct QcqpSolution {
  CVec phi;
  double lambda = 0.0;
  double constraint = 0.0;    // phi^H B phi
  double lambda_bound = 0.0;  // sqrt(v^H B^-1 v / P)
  int iterations = 0;
};

// One outer iteration of the alternating optimization.
struct TraceStep {
  double mse_after_m = 0.0;
  double mse_after_b = 0.0;
  double mse_after_phi = 0.0;
  double ris_power = 0.0;      // RIS transmit power after the step (W)
  double user_excess = 0.0;    // max_k |b_k|^2 / P_k
  double nu = 0.0;             // multiplier of the coupled constraint in update_b
  double lambda = 0.0;         // multiplier of the RIS QCQP
  int rejected = 0;            // candidate updates discarded for not improving the MSE
};

struct SolveTrace {
  double initial_mse = 0.0;
  std::vector<TraceStep> steps;
  bool converged = false;

  int iterations() const { return static_cast<int>(steps.size()); }
  double final_mse() const { return steps.empty() ? initial_mse : steps.back().mse_after_phi; }
  // Every recorded value, in the order it was produced.
  std::vector<double> sequence() const;
};

struct SolveResult {
  BeamState state;
  SolveTrace trace;
  MseBreakdown breakdown;
};

// Optimal combiner R^-1 (1/K) sum_k h_e,k b_k for a RIS response given either
// as the diagonal phi or as the product G * R (M x N).
CVec update_m(const CMat& He, const CVec& b, const CMat& G, const CVec& phi,
              const PowerBudget& budget);
CVec update_m_general(const CMat& He, const CVec& b, const CMat& G_response,
                      const PowerBudget& budget);

struct BUpdate {
  CVec b;
  double nu = 0.0;  // multiplier of the coupled constraint; +inf when the residual is zero
};

// Global optimum of  min sum_k |g_k b_k - 1/K|^2
//   s.t. |b_k|^2 <= P_k,  sum_k w_k |b_k|^2 <= residual_ris_power.
BUpdate update_b(const CVec& g, const RVec& w, const PowerBudget& budget,
                 double residual_ris_power, const SolverOptions& opts);

QcqpProblem build_phi_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                           const PowerBudget& budget);

// phi = (A + lambda B)^-1 v with lambda >= 0 from bisection on [0, lambda_bound].
QcqpSolution solve_qcqp_kkt(const QcqpProblem& prob, const SolverOptions& opts);

// b_k = sqrt(P_k); uniform random phases with a common amplitude that puts
// the RIS power exactly on its budget. m is left at zero.
BeamState initial_state(const ChannelSet& ch, const PowerBudget& budget, std::uint64_t seed);

SolveResult ao_solve(const ChannelSet& ch, const PowerBudget& budget, const SolverOptions& opts,
                     const std::optional<BeamState>& init = std::nullopt);

// Passive-RIS baseline: noiseless unit-modulus reflection, no RIS power budget.
SolveResult passive_ao_solve(const ChannelSet& ch, const PowerBudget& budget,
                             const SolverOptions& opts);

}  // namespace aircomp
