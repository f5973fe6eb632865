#include "aircomp/si_solver.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "tridiag.hpp"

namespace aircomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kLambdaGridSize = 200;
constexpr double kLambdaGridStart = 1e-12;
constexpr int kMaxLambdaDoublings = 60;

CMat hermitian_part(const CMat& x) { return 0.5 * (x + x.adjoint()); }

// I + diag(d) H
CMat omega(const CVec& d, const CMat& H) {
  CMat out = d.asDiagonal() * H;
  out.diagonal().array() += 1.0;
  return out;
}

// c_k = 1/K - (m^H h_k) b_k for the columns h_k of `channels`.
CVec target_residuals(const CVec& m, const CVec& b, const CMat& channels) {
  const auto K = channels.cols();
  const CVec proj = channels.adjoint() * m;  // conj(m^H h_k)
  CVec c(K);
  for (Eigen::Index k = 0; k < K; ++k)
    c(k) = 1.0 / static_cast<double>(K) - std::conj(proj(k)) * b(k);
  return c;
}

CMat zero_si(int N) { return CMat::Zero(N, N); }

// Shrinks phi by a common factor until the effective RIS power fits P_r.
CVec restore_feasible(const CVec& phi, const CVec& b, const ChannelSet& ch, const CMat& H,
                      const PowerBudget& budget) {
  auto power = [&](double scale) {
    return ris_tx_power_general(b, effective_phi_si(scale * phi, H), ch.H_r, budget.sigma_r2);
  };
  if (power(1.0) <= budget.P_r) return phi;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (power(mid) <= budget.P_r)
      lo = mid;
    else
      hi = mid;
  }
  return lo * phi;
}

}  // namespace

void PenaltySchedule::validate() const {
  if (tau0 && !(*tau0 > 0.0)) throw std::invalid_argument("penalty schedule: tau0 must be > 0");
  if (!(tau0_scale > 0.0)) throw std::invalid_argument("penalty schedule: tau0_scale must be > 0");
  if (!(growth > 1.0)) throw std::invalid_argument("penalty schedule: growth must be > 1");
  if (!(inner_tol > 0.0) || max_inner_iters < 1)
    throw std::invalid_argument("penalty schedule: inner_tol > 0 and max_inner_iters >= 1 required");
}

void SiQcqpAffine::validate() const {
  const auto N = v.size();
  require_dims(A.rows() == N && A.cols() == N, "affine QCQP A must be N x N");
  require_dims(B.size() == N && q.size() == N, "affine QCQP B and q must have N entries");
  if (!(P > 0.0)) throw std::domain_error("affine QCQP bound P must be positive");
  if ((B.array() < 0.0).any()) throw std::domain_error("affine QCQP B must be non-negative");
  if (hermitian_defect(A) > 1e-10) throw std::domain_error("affine QCQP A must be Hermitian");
}

double SiQcqpAffine::objective(const CVec& x) const {
  return x.dot(A * x).real() - 2.0 * v.dot(x).real() + offset;
}

double SiQcqpAffine::constraint(const CVec& x) const {
  return B.dot(x.cwiseAbs2()) + 2.0 * q.dot(x).real() + c;
}

QcqpProblem build_phi_si_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                              const CMat& H_si, const CVec& phi_tilde, double tau,
                              const PowerBudget& budget) {
  const int K = ch.K(), N = ch.N();
  require_dims(m.size() == ch.M() && b.size() == K && phi_tilde.size() == N, "SI phi QCQP shapes");
  require_dims(H_si.rows() == N && H_si.cols() == N, "H_si must be N x N");

  const CMat Om = omega(phi_tilde, H_si);
  const CVec mbar = Om.adjoint() * (ch.G.adjoint() * m);

  // abar_k = diag(h_r,k^* b_k^*) Omega^H G^H m
  CMat abar = ch.H_r.conjugate() * b.conjugate().asDiagonal();
  abar.array().colwise() *= mbar.array();
  const CVec c = target_residuals(m, b, ch.H_d);

  QcqpProblem prob;
  prob.A = abar * abar.adjoint();
  prob.A.diagonal() += (budget.sigma_r2 * mbar.cwiseAbs2()).cast<cd>();
  prob.A.diagonal().array() += tau;
  prob.A = hermitian_part(prob.A);

  const CMat OmOm = Om.adjoint() * Om;
  const RVec b2 = b.cwiseAbs2();
  const CMat W = ch.H_r.conjugate() * b2.cast<cd>().asDiagonal() * ch.H_r.transpose();
  prob.B = OmOm.cwiseProduct(W);
  prob.B.diagonal() += budget.sigma_r2 * OmOm.diagonal();
  prob.B = hermitian_part(prob.B);

  prob.v = abar * c + tau * phi_tilde;
  prob.P = budget.P_r;
  prob.offset = c.squaredNorm() + tau * phi_tilde.squaredNorm();
  prob.A_diag = (budget.sigma_r2 * mbar.cwiseAbs2()).array() + tau;
  prob.A_factor = std::move(abar);
  return prob;
}

SiQcqpAffine build_tilde_qcqp(const CVec& m, const CVec& b, const ChannelSet& ch,
                              const CMat& H_si, const CVec& phi, double tau,
                              const PowerBudget& budget) {
  const int K = ch.K(), N = ch.N();
  require_dims(m.size() == ch.M() && b.size() == K && phi.size() == N, "SI tilde QCQP shapes");
  require_dims(H_si.rows() == N && H_si.cols() == N, "H_si must be N x N");

  const CVec u = ch.G.adjoint() * m;  // G^H m
  const RVec pd = phi.cwiseAbs2();    // diag(Phi Phi^H)
  const RVec b2 = b.cwiseAbs2();

  // x_k = H diag(phi) h_r,k b_k ; atil_k = diag(x_k^*) G^H m
  const CMat X = H_si * (phi.asDiagonal() * ch.H_r * b.asDiagonal());
  CMat atil = X.conjugate();
  atil.array().colwise() *= u.array();

  const CVec ctil = target_residuals(m, b, equivalent_channels(ch, phi));
  const CVec s = u.cwiseProduct((H_si * pd.cwiseProduct(u).cast<cd>()).conjugate());

  SiQcqpAffine prob;
  const CMat S = H_si.conjugate() * pd.cast<cd>().asDiagonal() * H_si.transpose();
  prob.A = atil * atil.adjoint() +
           budget.sigma_r2 * (u.asDiagonal() * S * u.conjugate().asDiagonal());
  prob.A.diagonal().array() += tau;
  prob.A = hermitian_part(prob.A);
  prob.v = atil * ctil + tau * phi - budget.sigma_r2 * s;

  CMat D = ch.H_r * b2.cast<cd>().asDiagonal() * ch.H_r.adjoint();
  D.diagonal().array() += budget.sigma_r2;
  D = phi.asDiagonal() * D * phi.conjugate().asDiagonal();
  prob.B = (H_si * D).cwiseProduct(H_si.conjugate()).rowwise().sum().real().cwiseMax(0.0);
  prob.q = D.cwiseProduct(H_si.conjugate()).rowwise().sum();  // diag(D H^H)
  prob.c = D.diagonal().real().sum();
  prob.P = budget.P_r;
  prob.offset = ctil.squaredNorm() + tau * phi.squaredNorm() +
                budget.sigma_r2 * pd.dot(u.cwiseAbs2());
  return prob;
}

namespace {

// The constraint residual along the KKT path lambda -> (A + lambda B)^-1 (v - lambda q),
// evaluated in a basis where A = L L^H and L^-1 diag(B) L^-H is simple.
class AffinePath {
 public:
  virtual ~AffinePath() = default;
  // Residual at lambda; sets `ok` false if the shifted system broke down.
  virtual double residual(double lambda, bool& ok) = 0;
  virtual CVec point(double lambda) = 0;
};

// L^-1 diag(B) L^-H = Q T Q^H
class TridiagPath final : public AffinePath {
 public:
  TridiagPath(const Eigen::LLT<CMat>& achol, const SiQcqpAffine& prob)
      : L_(achol.matrixL()), tri_(scaled_b(L_, prob.B)),
        y_(tri_.to_basis(L_.solve(prob.v))), z_(tri_.to_basis(L_.solve(prob.q))),
        c_(prob.c - prob.P) {}

  double residual(double lambda, bool& ok) override {
    if (!tri_.solve_shifted(1.0, lambda, y_ - lambda * z_, xi_)) {
      ok = false;
      return kInf;
    }
    return tri_.quad(xi_) + 2.0 * z_.dot(xi_).real() + c_;
  }

  CVec point(double lambda) override {
    bool ok = true;
    residual(lambda, ok);
    if (!ok) throw SolverError("solve_si_affine_kkt: A + lambda B is not positive definite");
    return L_.adjoint().solve(tri_.from_basis(xi_));
  }

 private:
  static CMat scaled_b(const Eigen::TriangularView<const CMat, Eigen::Lower>& L, const RVec& B) {
    const CMat X = L.solve(CMat(B.cwiseSqrt().cast<cd>().asDiagonal()));
    return hermitian_part(X * X.adjoint());
  }

  Eigen::TriangularView<const CMat, Eigen::Lower> L_;
  detail::HermitianTridiag tri_;
  CVec y_, z_, xi_;
  double c_;
};

// L^-1 diag(B) L^-H = U diag(mu) U^H, with mu clamped at zero.
class EigenPath final : public AffinePath {
 public:
  EigenPath(const Eigen::LLT<CMat>& achol, const SiQcqpAffine& prob)
      : L_(achol.matrixL()), c_(prob.c - prob.P) {
    const CMat X = L_.solve(CMat(prob.B.cwiseSqrt().cast<cd>().asDiagonal()));
    Eigen::SelfAdjointEigenSolver<CMat> eig(hermitian_part(X * X.adjoint()));
    if (eig.info() != Eigen::Success) throw SolverError("solve_si_affine_kkt: eigendecomposition failed");
    U_ = eig.eigenvectors();
    mu_ = eig.eigenvalues().cwiseMax(0.0);
    y_ = U_.adjoint() * L_.solve(prob.v);
    z_ = U_.adjoint() * L_.solve(prob.q);
  }

  double residual(double lambda, bool&) override {
    fill(lambda);
    double quad = 0.0;
    for (Eigen::Index i = 0; i < xi_.size(); ++i) quad += mu_(i) * std::norm(xi_(i));
    return quad + 2.0 * z_.dot(xi_).real() + c_;
  }

  CVec point(double lambda) override {
    fill(lambda);
    return L_.adjoint().solve(U_ * xi_);
  }

 private:
  void fill(double lambda) {
    xi_ = (y_ - lambda * z_).cwiseQuotient((1.0 + lambda * mu_.array()).matrix().cast<cd>());
  }

  Eigen::TriangularView<const CMat, Eigen::Lower> L_;
  CMat U_;
  RVec mu_;
  CVec y_, z_, xi_;
  double c_;
};

struct Multiplier {
  double lambda = 0.0;
  int iterations = 0;
};

// Grid bracket then bisection. Returns nullopt if the path broke down.
std::optional<Multiplier> search_multiplier(AffinePath& path, double P, const SolverOptions& opts) {
  bool ok = true;
  auto residual = [&](double lambda) { return path.residual(lambda, ok); };
  Multiplier out;
  if (residual(0.0) <= 0.0) return ok ? std::optional<Multiplier>(out) : std::nullopt;

  double lambda_max = 1.0;
  for (int d = 0; d < kMaxLambdaDoublings && residual(lambda_max) > 0.0; ++d) lambda_max *= 2.0;
  const double at_max = residual(lambda_max);
  if (!ok) return std::nullopt;
  if (at_max > 0.0)
    throw SolverError("solve_si_affine_kkt: no feasible multiplier up to " +
                      std::to_string(lambda_max) + " (constraint residual " +
                      std::to_string(at_max) + ")");

  double lo = 0.0, hi = lambda_max;
  const double ratio = std::log(lambda_max / kLambdaGridStart) / (kLambdaGridSize - 1);
  for (int i = 0; i < kLambdaGridSize; ++i) {
    const double lam = i + 1 == kLambdaGridSize ? lambda_max : kLambdaGridStart * std::exp(ratio * i);
    if (residual(lam) <= 0.0) {
      hi = lam;
      break;
    }
    lo = lam;
  }
  for (int it = 0; it < opts.max_bisect_iters; ++it) {
    out.iterations = it + 1;
    if (-residual(hi) <= opts.bisect_tol * P * std::min(1.0, 1.0 / hi)) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (residual(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  if (!ok) return std::nullopt;
  out.lambda = hi;
  return out;
}

}  // namespace

AffineSolution solve_si_affine_kkt(const SiQcqpAffine& prob, const SolverOptions& opts) {
  prob.validate();
  Eigen::LLT<CMat> achol(hermitian_part(prob.A));
  if (achol.info() != Eigen::Success) throw SolverError("solve_si_affine_kkt: A is not positive definite");

  std::unique_ptr<AffinePath> path = std::make_unique<TridiagPath>(achol, prob);
  std::optional<Multiplier> mult = search_multiplier(*path, prob.P, opts);
  if (!mult) {
    path = std::make_unique<EigenPath>(achol, prob);
    mult = search_multiplier(*path, prob.P, opts);
  }

  AffineSolution sol;
  sol.lambda = mult->lambda;
  sol.iterations = mult->iterations;
  sol.phi = path->point(sol.lambda);
  sol.constraint = prob.constraint(sol.phi);
  return sol;
}

double default_tau0(const CVec& m, const CVec& b, const ChannelSet& ch, const PowerBudget& budget,
                    double scale) {
  const QcqpProblem ideal = build_phi_qcqp(m, b, ch, budget);
  return std::max(scale * ideal.A.norm() / ch.N(), std::numeric_limits<double>::min());
}

double si_split_objective(const CVec& m, const CVec& b, const ChannelSet& ch, const CMat& H_si,
                          const CVec& phi, const CVec& phi_tilde, const PowerBudget& budget) {
  const CMat response = omega(phi_tilde, H_si) * phi.asDiagonal();
  const BeamState s{m, b, phi};
  const MseBreakdown out = mse_general(s, ch, budget, response);
  return out.misalignment + out.ris_noise;
}

double si_split_constraint(const CVec& b, const ChannelSet& ch, const CMat& H_si,
                           const CVec& phi, const CVec& phi_tilde, const PowerBudget& budget) {
  const CMat response = omega(phi_tilde, H_si) * phi.asDiagonal();
  return ris_tx_power_general(b, response, ch.H_r, budget.sigma_r2);
}

RisSiResult ris_beamforming_si(const CVec& m, const CVec& b, const ChannelSet& ch,
                               const CMat& H_si, const PowerBudget& budget,
                               const PenaltySchedule& schedule, const SolverOptions& opts,
                               const CVec& init_phi_tilde) {
  schedule.validate();
  RisSiResult out;
  double tau = schedule.tau0 ? *schedule.tau0 : default_tau0(m, b, ch, budget, schedule.tau0_scale);
  CVec phi_tilde = init_phi_tilde;
  CVec phi = init_phi_tilde;

  // Without self-interference the split variable drops out of f2 and g2, so
  // the penalized pair has the ideal phi step as its exact solution.
  if ((H_si.array() == cd(0.0)).all()) {
    out.phi = solve_qcqp_kkt(build_phi_qcqp(m, b, ch, budget), opts).phi;
    out.phi_tilde = out.phi;
    out.gap = 0.0;
    out.iterations = 1;
    out.tau = tau;
    out.converged = true;
    return out;
  }

  for (int it = 0; it < schedule.max_inner_iters; ++it) {
    phi = solve_qcqp_kkt(build_phi_si_qcqp(m, b, ch, H_si, phi_tilde, tau, budget), opts).phi;
    phi_tilde = solve_si_affine_kkt(build_tilde_qcqp(m, b, ch, H_si, phi, tau, budget), opts).phi;
    out.gap = (phi - phi_tilde).norm() / std::max(phi.norm(), kGapFloor);
    out.iterations = it + 1;
    out.tau = tau;
    tau *= schedule.growth;
    if (out.gap <= schedule.inner_tol) {
      out.converged = true;
      break;
    }
  }
  out.phi = std::move(phi);
  out.phi_tilde = std::move(phi_tilde);
  return out;
}

SolveResult ao_solve_si(const ChannelSet& ch, const PowerBudget& budget, const SolverOptions& opts,
                        const PenaltySchedule& schedule) {
  ch.validate();
  budget.validate(ch.K());
  opts.validate();
  schedule.validate();
  const int K = ch.K();
  const CMat H = ch.H_si ? *ch.H_si : zero_si(ch.N());

  BeamState s = initial_state(ch, budget, opts.seed);
  s.phi = restore_feasible(s.phi, s.b, ch, H, budget);

  auto eval = [&](const BeamState& st) {
    return mse_general(st, ch, budget, effective_phi_si(st.phi, H)).total;
  };

  SolveResult out;
  double cur = eval(s);
  out.trace.initial_mse = cur;

  for (int it = 0; it < opts.max_outer_iters; ++it) {
    const double start = cur;
    TraceStep step;
    const CMat psi = effective_phi_si(s.phi, H);
    const CMat He = equivalent_channels_general(ch, psi);

    {
      BeamState cand = s;
      cand.m = update_m_general(He, s.b, ch.G * psi, budget);
      const double val = eval(cand);
      if (val <= cur) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
    }
    step.mse_after_m = cur;

    {
      const CVec g = He.adjoint() * s.m;
      const CMat reflected = psi * ch.H_r;
      RVec w(K);
      for (int k = 0; k < K; ++k) w(k) = reflected.col(k).squaredNorm();
      const double residual = budget.P_r - budget.sigma_r2 * psi.squaredNorm();
      BUpdate bu = update_b(g.conjugate(), w, budget, residual, opts);
      BeamState cand = s;
      cand.b = std::move(bu.b);
      const double val = eval(cand);
      if (val <= cur) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
      step.nu = bu.nu;
    }
    step.mse_after_b = cur;

    {
      // phi~ starts at the phi step of the self-interference-free model
      const CVec start = solve_qcqp_kkt(build_phi_qcqp(s.m, s.b, ch, budget), opts).phi;
      const RisSiResult r = ris_beamforming_si(s.m, s.b, ch, H, budget, schedule, opts, start);
      BeamState cand = s;
      cand.phi = restore_feasible(r.phi, s.b, ch, H, budget);
      const double val = eval(cand);
      if (val <= cur) {
        s = std::move(cand);
        cur = val;
      } else {
        ++step.rejected;
      }
    }
    step.mse_after_phi = cur;
    const CMat psi_now = effective_phi_si(s.phi, H);
    step.ris_power = ris_tx_power_general(s.b, psi_now, ch.H_r, budget.sigma_r2);
    double excess = 0.0;
    for (int k = 0; k < K; ++k) excess = std::max(excess, std::norm(s.b(k)) / budget.P(k));
    step.user_excess = excess;
    out.trace.steps.push_back(step);

    if (start - cur <= opts.outer_tol * std::max(start, 1e-300)) {
      out.trace.converged = true;
      break;
    }
  }

  out.breakdown = mse_general(s, ch, budget, effective_phi_si(s.phi, H));
  out.state = std::move(s);
  return out;
}

}  // namespace aircomp
