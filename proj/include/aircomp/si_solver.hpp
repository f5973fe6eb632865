#pragma once

#include <optional>

#include "aircomp/ao_solver.hpp"

namespace aircomp {

// Penalty schedule of the split RIS design. tau0 unset means
// tau0_scale * ||A0||_F / N for the ideal phi QCQP at the current m, b.
struct PenaltySchedule {
  std::optional<double> tau0;
  double tau0_scale = 1e-3;
  double growth = 1.1;
  double inner_tol = 1e-6;  // on ||phi - phi~|| / max(||phi||, eps)
  int max_inner_iters = 100;

  void validate() const;
};

inline constexpr double kGapFloor = 1e-30;

// min x^H A x - 2 Re(v^H x) + offset
//   s.t. x^H diag(B) x + 2 Re(q^H x) + c <= P
struct SiQcqpAffine {
  CMat A;  // Hermitian PD
  RVec B;  // diagonal, >= 0
  CVec v;
  CVec q;
  double c = 0.0;  // Tr(D)
  double P = 0.0;
  double offset = 0.0;

  void validate() const;
  double objective(const CVec& x) const;
  double constraint(const CVec& x) const;
};

struct AffineSolution {
  CVec phi;
  double lambda = 0.0;
  double constraint = 0.0;
  int iterations = 0;
};

// Ideal-model phi subproblem with Omega = I + diag(phi_tilde) H and the
// coupling penalty tau ||phi - phi_tilde||^2.
QcqpProblem build_phi_si_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                              const CMat& H_si, const CVec& phi_tilde, double tau,
                              const PowerBudget& budget);

// phi_tilde subproblem for fixed phi (quadratic-plus-affine constraint).
SiQcqpAffine build_tilde_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                              const CMat& H_si, const CVec& phi, double tau,
                              const PowerBudget& budget);

// x = (A + lambda B)^-1 (v - lambda q); lambda from a geometric grid bracket
// refined by bisection. Throws SolverError when no feasible lambda exists.
AffineSolution solve_si_affine_kkt(const SiQcqpAffine& prob, const SolverOptions& opts);

// Scale-relative initial penalty: scale * ||A0||_F / N for the ideal phi QCQP.
double default_tau0(const CVec& m, const CVec& b, const ChannelSet& ch, const PowerBudget& budget,
                    double scale = 1e-3);

// Direct evaluation of the split objective (without penalty) and constraint.
double si_split_objective(const CVec& m, const CVec& b, const ChannelSet& ch, const CMat& H_si,
                          const CVec& phi, const CVec& phi_tilde, const PowerBudget& budget);
double si_split_constraint(const CVec& b, const ChannelSet& ch, const CMat& H_si,
                           const CVec& phi, const CVec& phi_tilde, const PowerBudget& budget);

struct RisSiResult {
  CVec phi;
  CVec phi_tilde;
  double gap = 0.0;   // ||phi - phi_tilde|| / max(||phi||, eps)
  double tau = 0.0;   // final penalty
  int iterations = 0;
  bool converged = false;
};

RisSiResult ris_beamforming_si(const CVec& m, const CVec& b, const ChannelSet& ch,
                               const CMat& H_si, const PowerBudget& budget,
                               const PenaltySchedule& schedule, const SolverOptions& opts,
                               const CVec& init_phi_tilde);

// Self-interference-aware alternating optimization. ch.H_si must be set
// (a missing H_si is treated as zero). The returned breakdown is evaluated
// through the effective response (I + diag(phi) H) diag(phi).
SolveResult ao_solve_si(const ChannelSet& ch, const PowerBudget& budget, const SolverOptions& opts,
                        const PenaltySchedule& schedule);

}  // namespace aircomp
