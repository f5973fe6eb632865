#include "aircomp/ao_solver.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "tridiag.hpp"

namespace aircomp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Candidates worse than the incumbent by more than this (relative) mean the
// subproblem solve is broken, not merely inexact.
constexpr double kMonotoneBreakTol = 1e-6;

CMat hermitian_part(const CMat& x) { return 0.5 * (x + x.adjoint()); }

double max_user_excess(const CVec& b, const RVec& P) {
  double out = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) out = std::max(out, std::norm(b(k)) / P(k));
  return out;
}

// Outcome of comparing a candidate update against the current objective.
enum class Step { Accept, Reject };

Step judge(double candidate, double incumbent, const char* what) {
  if (!std::isfinite(candidate)) throw SolverError(std::string(what) + " update produced non-finite MSE");
  if (candidate <= incumbent) return Step::Accept;
  if (candidate <= incumbent * (1.0 + kMonotoneBreakTol) + 10.0 * kEps) return Step::Reject;
  throw SolverError(std::string("non-monotone ") + what + " update: " + std::to_string(incumbent) +
                    " -> " + std::to_string(candidate));
}


// Bisection on lambda in [0, hi] for a constraint value that decreases in
// lambda; stops once hi is feasible with slack below bisect_tol * P.
template <class F>
double bisect_lambda(F&& constraint_at, double hi, double P, const SolverOptions& opts,
                     int& iterations) {
  double lo = 0.0;
  for (int it = 0; it < opts.max_bisect_iters; ++it) {
    iterations = it + 1;
    const double gap = P - constraint_at(hi);
    if (gap <= opts.bisect_tol * P * std::min(1.0, 1.0 / hi)) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (constraint_at(mid) > P)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_outer_iters < 1 || max_bisect_iters < 1)
    throw std::invalid_argument("solver options: iteration caps must be >= 1");
  if (!(outer_tol > 0.0) || !(bisect_tol > 0.0) || !(b_dual_tol > 0.0))
    throw std::invalid_argument("solver options: tolerances must be > 0");
}

void QcqpProblem::validate() const {
  const auto N = v.size();
  require_dims(A.rows() == N && A.cols() == N, "QCQP A must be N x N");
  require_dims(B.rows() == N && B.cols() == N, "QCQP B must be N x N");
  if (!(P > 0.0)) throw std::domain_error("QCQP bound P must be positive");
  if (hermitian_defect(A) > 1e-10 || hermitian_defect(B) > 1e-10)
    throw std::domain_error("QCQP matrices must be Hermitian");
  if (A_factor)
    require_dims(A_factor->rows() == N && A_diag.size() == N, "QCQP A structure must have N rows");
}

double QcqpProblem::objective(const CVec& phi) const {
  return phi.dot(A * phi).real() - 2.0 * v.dot(phi).real() + offset;
}

double QcqpProblem::constraint(const CVec& phi) const { return phi.dot(B * phi).real(); }

std::vector<double> SolveTrace::sequence() const {
  std::vector<double> out{initial_mse};
  for (const auto& s : steps) {
    out.push_back(s.mse_after_m);
    out.push_back(s.mse_after_b);
    out.push_back(s.mse_after_phi);
  }
  return out;
}

CVec update_m_general(const CMat& He, const CVec& b, const CMat& G_response,
                      const PowerBudget& budget) {
  const auto M = He.rows(), K = He.cols();
  require_dims(b.size() == K, "b must have K entries");
  require_dims(G_response.rows() == M, "G * response must have M rows");

  const CMat Hb = He * b.asDiagonal();
  CMat R = Hb * Hb.adjoint();
  R.noalias() += budget.sigma_r2 * (G_response * G_response.adjoint());
  R.diagonal().array() += budget.sigma_a2;
  R = hermitian_part(R);
  const CVec rhs = Hb.rowwise().sum() / static_cast<double>(K);

  Eigen::LLT<CMat> llt(R);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && budget.sigma_a2 <= 0.0) {
    const double floor = 1e-14 * R.diagonal().real().sum() / static_cast<double>(M);
    singular = llt.matrixLLT().diagonal().cwiseAbs2().minCoeff() <= floor;
  }
  if (singular) throw SolverError("update_m: combiner covariance R is singular");
  return llt.solve(rhs);
}

CVec update_m(const CMat& He, const CVec& b, const CMat& G, const CVec& phi,
              const PowerBudget& budget) {
  require_dims(phi.size() == G.cols(), "phi must have N entries");
  return update_m_general(He, b, G * phi.asDiagonal(), budget);
}

BUpdate update_b(const CVec& g, const RVec& w, const PowerBudget& budget,
                 double residual_ris_power, const SolverOptions& opts) {
  const auto K = g.size();
  require_dims(w.size() == K && budget.P.size() == K, "update_b shapes");
  if (residual_ris_power < -kFeasibilityTol * budget.P_r)
    throw SolverError("update_b: RIS power budget already exceeded (residual " +
                      std::to_string(residual_ris_power) + " W)");
  const double res = std::max(residual_ris_power, 0.0);
  const double inv_k = 1.0 / static_cast<double>(K);

  const RVec gmag = g.cwiseAbs();
  auto magnitudes = [&](double nu) {
    RVec r(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      if (gmag(k) == 0.0) {
        r(k) = 0.0;
      } else if (std::isinf(nu)) {
        r(k) = w(k) > 0.0 ? 0.0 : std::min(std::sqrt(budget.P(k)), inv_k / gmag(k));
      } else {
        r(k) = std::min(std::sqrt(budget.P(k)), gmag(k) * inv_k / (gmag(k) * gmag(k) + nu * w(k)));
      }
    }
    return r;
  };
  auto coupled = [&](const RVec& r) { return w.dot(r.cwiseAbs2()); };

  double nu = 0.0;
  RVec r = magnitudes(0.0);
  if (coupled(r) > res) {
    if (res == 0.0) {
      nu = kInf;
    } else {
      // Bracket: start where the unclipped magnitudes of the heaviest users halve.
      double hi = 0.0;
      for (Eigen::Index k = 0; k < K; ++k)
        if (w(k) > 0.0) hi = std::max(hi, gmag(k) * gmag(k) / w(k));
      if (!(hi > 0.0)) hi = 1.0;
      double lo = 0.0;
      while (coupled(magnitudes(hi)) > res) {
        lo = hi;
        hi *= 2.0;
        if (std::isinf(hi)) break;
      }
      if (std::isinf(hi)) {
        nu = kInf;
      } else {
        for (int it = 0; it < opts.max_bisect_iters; ++it) {
          if (res - coupled(magnitudes(hi)) <= opts.b_dual_tol * res) break;
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          if (coupled(magnitudes(mid)) > res)
            lo = mid;
          else
            hi = mid;
        }
        nu = hi;
      }
    }
    r = magnitudes(nu);
  }

  BUpdate out{CVec(K), nu};
  for (Eigen::Index k = 0; k < K; ++k)
    out.b(k) = gmag(k) == 0.0 ? cd(0.0) : r(k) * std::conj(g(k)) / gmag(k);
  return out;
}

QcqpProblem build_phi_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                           const PowerBudget& budget) {
  const int K = ch.K(), N = ch.N();
  require_dims(m.size() == ch.M() && b.size() == K, "build_phi_qcqp shapes");
  const CVec u = ch.G.adjoint() * m;  // G^H m

  // a_k = diag(h_r,k^* b_k^*) G^H m
  CMat a = ch.H_r.conjugate() * b.conjugate().asDiagonal();
  a.array().colwise() *= u.array();

  CVec c(K);
  const CVec direct = ch.H_d.adjoint() * m;  // (h_d,k^H m) = (m^H h_d,k)^*
  for (int k = 0; k < K; ++k) c(k) = 1.0 / K - std::conj(direct(k)) * b(k);

  QcqpProblem prob;
  prob.A = a * a.adjoint();
  prob.A.diagonal() += (budget.sigma_r2 * u.cwiseAbs2()).cast<cd>();
  prob.A = hermitian_part(prob.A);
  prob.v = a * c;
  RVec bdiag = RVec::Constant(N, budget.sigma_r2);
  for (int k = 0; k < K; ++k) bdiag += std::norm(b(k)) * ch.H_r.col(k).cwiseAbs2();
  prob.B = bdiag.cast<cd>().asDiagonal();
  prob.P = budget.P_r;
  prob.offset = c.squaredNorm();
  prob.A_factor = std::move(a);
  prob.A_diag = budget.sigma_r2 * u.cwiseAbs2();
  return prob;
}

namespace {

bool is_diagonal(const CMat& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (i != j && X(i, j) != 0.0) return false;
  return true;
}

// Same multiplier search as the dense path, with (A + lambda B)^-1 v applied
// through the Woodbury identity. Returns nullopt when the structure does not
// give a positive diagonal at lambda = 0.
std::optional<QcqpSolution> solve_qcqp_structured(const QcqpProblem& prob,
                                                  const SolverOptions& opts) {
  const RVec bd = prob.B.diagonal().real();
  if ((bd.array() <= 0.0).any() || (prob.A_diag.array() <= 0.0).any()) return std::nullopt;
  const CMat& F = *prob.A_factor;
  const auto r = F.cols();

  auto apply_inverse = [&](double lambda) {
    const RVec dinv = (prob.A_diag + lambda * bd).cwiseInverse();
    const CVec y = dinv.cast<cd>().cwiseProduct(prob.v);
    if (r == 0) return y;
    CMat S = F.adjoint() * dinv.cast<cd>().asDiagonal() * F;
    S.diagonal().array() += 1.0;
    const CVec t = S.llt().solve(F.adjoint() * y);
    return CVec(y - dinv.cast<cd>().cwiseProduct(F * t));
  };
  auto constraint_at = [&](double lambda) {
    return bd.dot(apply_inverse(lambda).cwiseAbs2());
  };

  QcqpSolution sol;
  const double P = prob.P;
  sol.lambda_bound = std::sqrt(prob.v.cwiseAbs2().cwiseQuotient(bd).sum() / P);
  double lambda = 0.0;
  if (constraint_at(0.0) > P) {
    lambda = bisect_lambda(constraint_at, sol.lambda_bound, P, opts, sol.iterations);
  }
  sol.lambda = lambda;
  sol.phi = apply_inverse(lambda);
  sol.constraint = prob.constraint(sol.phi);
  return sol;
}

// Dense path through L^-1 A L^-H = Q T Q^H. Gives up (nullopt) when A is
// singular so the eigen path can return the minimum-norm point.
std::optional<QcqpSolution> solve_qcqp_tridiag(const QcqpProblem& prob, const SolverOptions& opts) {
  const CMat B = hermitian_part(prob.B);
  Eigen::LLT<CMat> bchol(B);
  if (bchol.info() != Eigen::Success) throw SolverError("solve_qcqp_kkt: B is not positive definite");
  const auto L = bchol.matrixL();
  CMat C = L.solve(hermitian_part(prob.A));
  C = L.solve(C.adjoint().eval());
  detail::HermitianTridiag tri(hermitian_part(C));
  const CVec w = tri.to_basis(L.solve(prob.v));

  CVec x;
  bool broken = false;
  auto constraint_at = [&](double lambda) {
    if (!tri.solve_shifted(lambda, 1.0, w, x)) {
      broken = true;
      return kInf;
    }
    return x.squaredNorm();
  };

  const double P = prob.P;
  QcqpSolution sol;
  sol.lambda_bound = std::sqrt(w.squaredNorm() / P);
  if (constraint_at(0.0) == kInf) return std::nullopt;
  double lambda = 0.0;
  if (x.squaredNorm() > P) {
    lambda = bisect_lambda(constraint_at, sol.lambda_bound, P, opts, sol.iterations);
    if (broken || !tri.solve_shifted(lambda, 1.0, w, x)) return std::nullopt;
  }
  sol.lambda = lambda;
  sol.phi = L.adjoint().solve(tri.from_basis(x));
  sol.constraint = prob.constraint(sol.phi);
  return sol;
}

QcqpSolution solve_qcqp_eig(const QcqpProblem& prob, const SolverOptions& opts) {
  const auto N = prob.v.size();
  QcqpSolution sol;
  // With B = L L^H and L^-1 A L^-H = U diag(mu) U^H, the constraint along the
  // KKT path is sum_i |w_i|^2 / (mu_i + lambda)^2, w = U^H L^-1 v.
  const CMat B = hermitian_part(prob.B);
  Eigen::LLT<CMat> bchol(B);
  if (bchol.info() != Eigen::Success) throw SolverError("solve_qcqp_kkt: B is not positive definite");
  const auto L = bchol.matrixL();
  CMat C = L.solve(hermitian_part(prob.A));
  C = L.solve(C.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<CMat> eig(hermitian_part(C));
  if (eig.info() != Eigen::Success) throw SolverError("solve_qcqp_kkt: eigendecomposition failed");
  const RVec mu = eig.eigenvalues().cwiseMax(0.0);
  const CVec w = eig.eigenvectors().adjoint() * L.solve(prob.v);
  const RVec w2 = w.cwiseAbs2();

  auto constraint_at = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (w2(i) == 0.0) continue;
      const double d = mu(i) + lambda;
      if (d <= 0.0) return kInf;
      s += w2(i) / (d * d);
    }
    return s;
  };

  const double P = prob.P;
  sol.lambda_bound = std::sqrt(w2.sum() / P);
  double lambda = 0.0;
  if (constraint_at(0.0) > P) {
    lambda = bisect_lambda(constraint_at, sol.lambda_bound, P, opts, sol.iterations);
  }
  sol.lambda = lambda;

  CMat K = hermitian_part(prob.A) + lambda * B;
  Eigen::LLT<CMat> kchol(K);
  if (kchol.info() == Eigen::Success) {
    sol.phi = kchol.solve(prob.v);
  } else {
    // lambda = 0 with singular A: minimum-norm stationary point.
    CVec z = CVec::Zero(N);
    for (Eigen::Index i = 0; i < N; ++i)
      if (mu(i) + lambda > 0.0) z(i) = w(i) / (mu(i) + lambda);
    sol.phi = L.adjoint().solve(eig.eigenvectors() * z);
  }
  sol.constraint = prob.constraint(sol.phi);
  return sol;
}

}  // namespace

QcqpSolution solve_qcqp_kkt(const QcqpProblem& prob, const SolverOptions& opts) {
  prob.validate();
  if (prob.v.squaredNorm() == 0.0) {
    QcqpSolution sol;
    sol.phi = CVec::Zero(prob.v.size());
    return sol;
  }
  if (prob.A_factor && is_diagonal(prob.B)) {
    if (auto fast = solve_qcqp_structured(prob, opts)) return *fast;
  }
  if (auto tri = solve_qcqp_tridiag(prob, opts)) return *tri;
  return solve_qcqp_eig(prob, opts);
}

BeamState initial_state(const ChannelSet& ch, const PowerBudget& budget, std::uint64_t seed) {
  const int K = ch.K(), N = ch.N();
  BeamState s;
  s.m = CVec::Zero(ch.M());
  s.b = budget.P.cwiseSqrt().cast<cd>();
  double denom = N * budget.sigma_r2;
  for (int k = 0; k < K; ++k) denom += budget.P(k) * ch.H_r.col(k).squaredNorm();
  const double alpha = denom > 0.0 ? std::sqrt(budget.P_r / denom) : 1.0;
  Rng rng(seed);
  s.phi.resize(N);
  for (int n = 0; n < N; ++n) s.phi(n) = std::polar(alpha, rng.phase());
  return s;
}

SolveResult ao_solve(const ChannelSet& ch, const PowerBudget& budget, const SolverOptions& opts,
                     const std::optional<BeamState>& init) {
  ch.validate();
  budget.validate(ch.K());
  opts.validate();
  const int K = ch.K();

  BeamState s = init ? *init : initial_state(ch, budget, opts.seed);
  if (s.m.size() == 0) s.m = CVec::Zero(ch.M());
  require_dims(s.m.size() == ch.M() && s.b.size() == K && s.phi.size() == ch.N(),
               "initial state shapes");

  SolveResult out;
  double cur = mse(s, ch, budget).total;
  out.trace.initial_mse = cur;

  for (int it = 0; it < opts.max_outer_iters; ++it) {
    const double start = cur;
    TraceStep step;

    // m-step
    CMat He = equivalent_channels(ch, s.phi);
    {
      BeamState cand = s;
      cand.m = update_m(He, s.b, ch.G, s.phi, budget);
      const double val = mse(cand, ch, budget).total;
      if (judge(val, cur, "m") == Step::Accept) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
    }
    step.mse_after_m = cur;

    // b-step
    {
      const CVec g = He.adjoint() * s.m;  // conj(m^H h_e,k)
      RVec w(K);
      const RVec phi2 = s.phi.cwiseAbs2();
      for (int k = 0; k < K; ++k) w(k) = phi2.dot(ch.H_r.col(k).cwiseAbs2());
      const double residual = budget.P_r - budget.sigma_r2 * phi2.sum();
      BUpdate bu = update_b(g.conjugate(), w, budget, residual, opts);
      BeamState cand = s;
      cand.b = std::move(bu.b);
      const double val = mse(cand, ch, budget).total;
      if (judge(val, cur, "b") == Step::Accept) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
      step.nu = bu.nu;
    }
    step.mse_after_b = cur;

    // phi-step
    {
      const QcqpSolution qs = solve_qcqp_kkt(build_phi_qcqp(s.m, s.b, ch, budget), opts);
      BeamState cand = s;
      cand.phi = qs.phi;
      const double val = mse(cand, ch, budget).total;
      if (judge(val, cur, "phi") == Step::Accept) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
      step.lambda = qs.lambda;
    }
    step.mse_after_phi = cur;
    step.ris_power = ris_tx_power(s.b, s.phi, ch.H_r, budget.sigma_r2);
    step.user_excess = max_user_excess(s.b, budget.P);
    out.trace.steps.push_back(step);

    if (start - cur <= opts.outer_tol * std::max(start, 1e-300)) {
      out.trace.converged = true;
      break;
    }
  }

  out.breakdown = mse(s, ch, budget);
  out.state = std::move(s);
  return out;
}

SolveResult passive_ao_solve(const ChannelSet& ch, const PowerBudget& budget,
                             const SolverOptions& opts) {
  ch.validate();
  budget.validate(ch.K());
  opts.validate();
  const int K = ch.K(), N = ch.N();

  PowerBudget pb = budget;
  pb.sigma_r2 = 0.0;

  BeamState s;
  s.m = CVec::Zero(ch.M());
  s.b = budget.P.cwiseSqrt().cast<cd>();
  s.phi.resize(N);
  Rng rng(opts.seed);
  for (int n = 0; n < N; ++n) s.phi(n) = std::polar(1.0, rng.phase());

  SolveResult out;
  double cur = mse(s, ch, pb).total;
  out.trace.initial_mse = cur;
  BeamState best = s;
  double best_mse = cur;

  const RVec no_coupling = RVec::Zero(K);
  for (int it = 0; it < opts.max_outer_iters; ++it) {
    const double start = cur;
    TraceStep step;

    CMat He = equivalent_channels(ch, s.phi);
    s.m = update_m(He, s.b, ch.G, s.phi, pb);
    step.mse_after_m = cur = mse(s, ch, pb).total;

    const CVec g = He.adjoint() * s.m;
    BUpdate bu = update_b(g.conjugate(), no_coupling, pb, kInf, opts);
    s.b = std::move(bu.b);
    step.mse_after_b = cur = mse(s, ch, pb).total;

    QcqpProblem prob = build_phi_qcqp(s.m, s.b, ch, pb);
    const double trace = prob.A.diagonal().real().sum();
    if (trace > 0.0) {
      prob.A.diagonal().array() += 1e-12 * trace / N;
      Eigen::LLT<CMat> llt(prob.A);
      if (llt.info() == Eigen::Success) {
        const CVec raw = llt.solve(prob.v);
        for (int n = 0; n < N; ++n) {
          const double mag = std::abs(raw(n));
          s.phi(n) = mag > 0.0 ? raw(n) / mag : cd(1.0);
        }
      }
    }
    step.mse_after_phi = cur = mse(s, ch, pb).total;
    step.ris_power = 0.0;
    step.user_excess = max_user_excess(s.b, budget.P);
    out.trace.steps.push_back(step);

    if (cur < best_mse) {
      best_mse = cur;
      best = s;
    }
    if (std::abs(start - cur) <= opts.outer_tol * std::max(start, 1e-300)) {
      out.trace.converged = true;
      break;
    }
  }

  out.breakdown = mse(best, ch, pb);
  out.state = std::move(best);
  return out;
}

}  // namespace aircomp
