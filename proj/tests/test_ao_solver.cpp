#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aircomp/ao_solver.hpp"
#include "oracles.hpp"

using namespace aircomp;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

ChannelSet scalar_channels(cd hd, cd hr, cd g) {
  ChannelSet ch;
  ch.H_d = CMat::Constant(1, 1, hd);
  ch.H_r = CMat::Constant(1, 1, hr);
  ch.G = CMat::Constant(1, 1, g);
  return ch;
}

QcqpProblem random_qcqp(oracle::Draw& d, int n, double P) {
  QcqpProblem q;
  q.A = oracle::random_psd(d, n, d.integer(1, n));
  q.B = oracle::random_psd(d, n, n, 0.1);
  q.v = d.vec(n);
  q.P = P;
  return q;
}

// Split of the MSE into the part that depends on phi.
double phi_objective(const BeamState& s, const ChannelSet& ch, const PowerBudget& budget) {
  const auto t = oracle::mse_terms(s.m, s.b, ch, oracle::diag(s.phi), budget.sigma_r2, budget.sigma_a2);
  return t.misalignment + t.ris_noise;
}

}  // namespace

TEST_CASE("update_m scalar example and zero coefficients") {
  PowerBudget budget = PowerBudget::uniform(1, 1.0, 1.0, 1.0);
  budget.sigma_r2 = 0.0;
  const CVec m = update_m(CMat::Ones(1, 1), CVec::Ones(1), CMat::Zero(1, 1), CVec::Zero(1), budget);
  CHECK(std::abs(m(0) - 0.5) < 1e-15);

  oracle::Draw d(1);
  const ChannelSet ch = oracle::random_channels(d, 3, 4, 2);
  const CVec phi = d.vec(4);
  const CVec z = update_m(equivalent_channels(ch, phi), CVec::Zero(2), ch.G, phi,
                          PowerBudget::uniform(2, 1.0, 1.0, 0.1));
  CHECK(z.norm() == 0.0);
}

TEST_CASE("update_m solves the normal equations") {
  oracle::Draw d(2);
  for (int t = 0; t < 20; ++t) {
    const int M = d.integer(1, 4), K = d.integer(1, 4), N = d.integer(1, 8);
    const ChannelSet ch = oracle::random_channels(d, M, N, K);
    const CVec b = d.vec(K), phi = d.vec(N);
    const PowerBudget budget = PowerBudget::uniform(K, 1.0, 1.0, d.uni(0.01, 1.0));
    const CMat He = equivalent_channels(ch, phi);
    const CVec m = update_m(He, b, ch.G, phi, budget);
    // R m = (1/K) sum_k h_e,k b_k built entry by entry
    CMat R = CMat::Zero(M, M);
    CVec rhs = CVec::Zero(M);
    const CMat GP = oracle::matmul(ch.G, oracle::diag(phi));
    for (int k = 0; k < K; ++k) {
      const CVec h = He.col(k);
      R += std::norm(b(k)) * h * h.adjoint();
      rhs += h * b(k) / static_cast<double>(K);
    }
    R += budget.sigma_r2 * GP * GP.adjoint();
    R += budget.sigma_a2 * CMat::Identity(M, M);
    CHECK((R * m - rhs).norm() <= 1e-12 * rhs.norm());
  }
}

TEST_CASE("update_m is a local minimizer of the mse") {
  oracle::Draw d(3);
  for (int t = 0; t < 10; ++t) {
    const ChannelSet ch = oracle::random_channels(d, 4, 8, 4);
    BeamState s{CVec(), d.vec(4), d.vec(8)};
    const PowerBudget budget = PowerBudget::uniform(4, 1.0, 1.0, 0.05);
    s.m = update_m(equivalent_channels(ch, s.phi), s.b, ch.G, s.phi, budget);
    const double best = mse(s, ch, budget).total;
    for (int p = 0; p < 50; ++p) {
      CVec delta = d.vec(4);
      delta *= 1e-3 / delta.norm();
      BeamState q = s;
      q.m += delta;
      CHECK(mse(q, ch, budget).total >= best);
    }
  }
}

TEST_CASE("update_b scalar examples") {
  SolverOptions opts;
  PowerBudget wide = PowerBudget::uniform(1, 10.0, 1.0, 0.1);
  BUpdate r = update_b(CVec::Ones(1), RVec::Zero(1), wide, 1.0, opts);
  CHECK(std::abs(r.b(0) - 1.0) < 1e-15);
  CHECK(r.nu == 0.0);

  PowerBudget tight = PowerBudget::uniform(1, 0.25, 1.0, 0.1);
  r = update_b(CVec::Ones(1), RVec::Zero(1), tight, 1.0, opts);
  CHECK(std::abs(r.b(0) - 0.5) < 1e-15);

  // phase follows conj(g)
  r = update_b(CVec::Constant(1, cd(0, 2)), RVec::Zero(1), wide, 1.0, opts);
  CHECK(std::abs(r.b(0) - cd(0, -0.5)) < 1e-15);
}

TEST_CASE("update_b zero gain and corrupted residual") {
  SolverOptions opts;
  CVec g(3);
  g << cd(0.5, 0.1), cd(0.0), cd(-0.2, 0.3);
  const BUpdate r = update_b(g, RVec::Ones(3), PowerBudget::uniform(3, 1.0, 1.0, 0.1), 0.5, opts);
  CHECK(r.b(1) == cd(0.0));
  CHECK_THROWS_AS(update_b(g, RVec::Ones(3), PowerBudget::uniform(3, 1.0, 1.0, 0.1), -0.1, opts),
                  SolverError);
}

TEST_CASE("update_b satisfies its optimality conditions") {
  oracle::Draw d(4);
  SolverOptions opts;
  for (int t = 0; t < 100; ++t) {
    const int K = d.integer(1, 6);
    const CVec g = d.vec(K);
    RVec w(K), P(K);
    for (int k = 0; k < K; ++k) {
      w(k) = d.uni(0.0, 2.0);
      P(k) = d.uni(0.1, 4.0);
    }
    const double res = d.uni(0.01, 1.0);
    PowerBudget budget{P, 1.0, 0.1, 0.1};
    const BUpdate r = update_b(g, w, budget, res, opts);
    double used = 0.0;
    for (int k = 0; k < K; ++k) {
      CHECK(std::norm(r.b(k)) <= P(k) * (1 + 1e-12));
      used += w(k) * std::norm(r.b(k));
    }
    CHECK(used <= res * (1 + 1e-10));
    if (r.nu > 0.0 && std::isfinite(r.nu)) CHECK(std::abs(used - res) <= 1e-8 * res);
    // stationarity of each unclipped coordinate: |g|^2 r + nu w r = |g| / K
    for (int k = 0; k < K; ++k) {
      const double mag = std::abs(r.b(k));
      if (mag < std::sqrt(P(k)) * (1 - 1e-9) && std::abs(g(k)) > 0.0) {
        const double lhs = (std::norm(g(k)) + r.nu * w(k)) * mag;
        CHECK(std::abs(lhs - std::abs(g(k)) / K) <= 1e-8 * std::abs(g(k)) / K);
      }
    }
  }
}

TEST_CASE("update_b matches a projected-gradient oracle") {
  oracle::Draw d(5);
  SolverOptions opts;
  for (int t = 0; t < 10; ++t) {
    const int K = d.integer(1, 6);
    const CVec g = d.vec(K);
    RVec w(K), P(K);
    for (int k = 0; k < K; ++k) {
      w(k) = d.uni(0.0, 1.0);
      P(k) = d.uni(0.05, 1.0);
    }
    const double res = d.uni(0.01, 0.5);
    const BUpdate r = update_b(g, w, PowerBudget{P, 1.0, 0.1, 0.1}, res, opts);
    const double step = 1.0 / (1.0 + g.cwiseAbs2().maxCoeff());
    const CVec ref = oracle::projected_gradient_b(g, P, w, res, step, 3000);
    CHECK(oracle::b_objective(g, r.b) <= oracle::b_objective(g, ref) + 1e-6);
  }
}

TEST_CASE("phi QCQP assembly matches direct evaluation") {
  oracle::Draw d(6);
  for (int t = 0; t < 50; ++t) {
    const int M = d.integer(1, 4), K = d.integer(1, 4), N = d.integer(1, 8);
    const ChannelSet ch = oracle::random_channels(d, M, N, K);
    const BeamState s{d.vec(M), d.vec(K), d.vec(N)};
    const PowerBudget budget = PowerBudget::uniform(K, 1.0, 1.0, d.uni(0.01, 1.0));
    const QcqpProblem q = build_phi_qcqp(s.m, s.b, ch, budget);
    CHECK(rel(q.objective(s.phi), phi_objective(s, ch, budget)) < 1e-9);
    CHECK(rel(q.constraint(s.phi), oracle::ris_power(s.b, oracle::diag(s.phi), ch.H_r, budget.sigma_r2)) < 1e-12);
    CHECK(q.P == budget.P_r);
    // structured form agrees with the dense matrix
    REQUIRE(q.A_factor.has_value());
    CMat A = *q.A_factor * q.A_factor->adjoint();
    A.diagonal() += q.A_diag.cast<cd>();
    CHECK((A - q.A).norm() <= 1e-12 * q.A.norm());
  }
}

TEST_CASE("phi QCQP with zero m and b") {
  oracle::Draw d(7);
  const ChannelSet ch = oracle::random_channels(d, 2, 5, 3);
  const PowerBudget budget = PowerBudget::uniform(3, 1.0, 1.0, 0.2);
  const QcqpProblem q = build_phi_qcqp(CVec::Zero(2), CVec::Zero(3), ch, budget);
  CHECK(q.A.norm() == 0.0);
  CHECK(q.v.norm() == 0.0);
  CHECK((q.B - 0.2 * CMat::Identity(5, 5)).norm() == 0.0);
}

TEST_CASE("KKT solver closed-form examples") {
  SolverOptions opts;
  QcqpProblem q;
  q.A = CMat::Identity(3, 3);
  q.B = CMat::Identity(3, 3);
  q.v = CVec::Constant(3, cd(0.3, 0.1));
  q.P = 1.0;
  QcqpSolution s = solve_qcqp_kkt(q, opts);
  CHECK(s.lambda == 0.0);
  CHECK((s.phi - q.v).norm() < 1e-14);

  q.v = CVec::Zero(3);
  q.v(0) = cd(0.0, 2.0);
  s = solve_qcqp_kkt(q, opts);
  CHECK(s.lambda == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((s.phi - q.v / 2.0).norm() < 1e-9);
}

TEST_CASE("KKT certificates on random dense instances") {
  oracle::Draw d(8);
  SolverOptions opts;
  for (int t = 0; t < 100; ++t) {
    const int n = d.integer(1, 12);
    const QcqpProblem q = random_qcqp(d, n, d.uni(0.01, 2.0));
    const QcqpSolution s = solve_qcqp_kkt(q, opts);
    const CVec r = (q.A + s.lambda * q.B) * s.phi - q.v;
    CHECK(r.norm() <= 1e-8 * q.v.norm());
    const double g = q.constraint(s.phi);
    CHECK(g <= q.P * (1 + 1e-8));
    CHECK(s.lambda >= 0.0);
    CHECK(s.lambda * std::abs(g - q.P) <= 1e-8 * q.P * std::max(1.0, s.lambda));
    CHECK(s.lambda < s.lambda_bound + 1e-300);
  }
}

TEST_CASE("structured and dense paths agree") {
  oracle::Draw d(9);
  SolverOptions opts;
  for (int t = 0; t < 30; ++t) {
    const int M = d.integer(1, 4), K = d.integer(1, 4), N = d.integer(2, 10);
    const ChannelSet ch = oracle::random_channels(d, M, N, K);
    const PowerBudget budget = PowerBudget::uniform(K, 1.0, d.uni(0.01, 1.0), d.uni(0.01, 1.0));
    QcqpProblem q = build_phi_qcqp(d.vec(M), d.vec(K), ch, budget);
    const QcqpSolution fast = solve_qcqp_kkt(q, opts);
    q.A_factor.reset();
    const QcqpSolution dense = solve_qcqp_kkt(q, opts);
    CHECK((fast.phi - dense.phi).norm() <= 1e-7 * std::max(dense.phi.norm(), 1e-300));
  }
}

TEST_CASE("singular A with a slack constraint returns the minimum-norm stationary point") {
  SolverOptions opts;
  QcqpProblem q;
  q.A = CMat::Zero(2, 2);
  q.A(0, 0) = 1.0;
  q.B = CMat::Identity(2, 2);
  q.v = CVec::Zero(2);
  q.v(0) = 0.5;
  q.P = 1.0;
  const QcqpSolution s = solve_qcqp_kkt(q, opts);
  CHECK(s.lambda == 0.0);
  CHECK(std::abs(s.phi(0) - 0.5) < 1e-14);
  CHECK(std::abs(s.phi(1)) < 1e-14);
}

TEST_CASE("ao_solve on a direct-link scalar instance") {
  const ChannelSet ch = scalar_channels(1.0, 0.0, 0.0);
  PowerBudget budget = PowerBudget::uniform(1, 1.0, 1.0, 1e-4);
  const SolveResult r = ao_solve(ch, budget, SolverOptions{});
  // |b| = sqrt(P) is optimal: mse(|b|) = s / (|b|^2 + s) decreases in |b|
  const double expected = 1e-4 / (1.0 + 1e-4);
  CHECK(r.breakdown.total < 1.0);
  CHECK(rel(r.breakdown.total, expected) < 1e-9);
  CHECK(std::abs(std::abs(r.state.b(0)) - 1.0) < 1e-9);
}

TEST_CASE("ao_solve from a fixed point stops after one iteration") {
  oracle::Draw d(10);
  const ChannelSet ch = oracle::random_channels(d, 2, 3, 2);
  const PowerBudget budget = PowerBudget::uniform(2, 1.0, 1.0, 0.01);
  SolverOptions opts;
  opts.max_outer_iters = 100000;
  opts.outer_tol = 1e-15;
  const SolveResult first = ao_solve(ch, budget, opts);
  REQUIRE(first.trace.converged);
  SolverOptions again;
  const SolveResult second = ao_solve(ch, budget, again, first.state);
  CHECK(second.trace.iterations() == 1);
  CHECK(second.trace.converged);
  CHECK(first.breakdown.total - second.breakdown.total <= again.outer_tol * first.breakdown.total);
}

TEST_CASE("ao_solve trace is monotone, the result feasible and better than the start") {
  oracle::Draw d(11);
  for (int seed = 0; seed < 20; ++seed) {
    const ChannelSet ch = gen_channels([] {
      Geometry g;
      g.K = 6;
      g.M = 4;
      g.N = 16;
      return g;
    }(), FadingParams{}, derive_seed(77, seed));
    const PowerBudget budget = PowerBudget::uniform(6, 1.0, 1.0, 1e-10);
    SolverOptions opts;
    opts.seed = seed;
    const SolveResult r = ao_solve(ch, budget, opts);
    const auto seq = r.trace.sequence();
    for (std::size_t i = 1; i < seq.size(); ++i)
      CHECK(seq[i] <= seq[i - 1] + 10 * std::numeric_limits<double>::epsilon() * (1 + seq[i - 1]));
    CHECK(r.breakdown.total < r.trace.initial_mse);
    CHECK(r.breakdown.total < 1.0 / 6);
    CHECK(check_feasible(r.state, ch, budget, 1e-8).empty());
    CHECK(rel(r.breakdown.total, mse(r.state, ch, budget).total) < 1e-14);
  }
}

TEST_CASE("initial state saturates both budgets") {
  oracle::Draw d(12);
  const ChannelSet ch = oracle::random_channels(d, 3, 9, 4);
  PowerBudget budget = PowerBudget::uniform(4, 0.7, 2.0, 0.05);
  const BeamState s = initial_state(ch, budget, 3);
  for (int k = 0; k < 4; ++k) CHECK(std::norm(s.b(k)) == doctest::Approx(0.7));
  CHECK(rel(ris_tx_power(s.b, s.phi, ch.H_r, budget.sigma_r2), 2.0) < 1e-12);
  const RVec mag = s.phi.cwiseAbs();
  CHECK(mag.maxCoeff() - mag.minCoeff() <= 1e-14 * mag.maxCoeff());
}

TEST_CASE("passive baseline returns unit-modulus reflection") {
  Geometry g;
  g.K = 5;
  g.M = 4;
  g.N = 24;
  const ChannelSet ch = gen_channels(g, FadingParams{}, 5);
  const SolveResult r = passive_ao_solve(ch, PowerBudget::uniform(5, 1.0, 1.0, 1e-10), SolverOptions{});
  // unit modulus up to the rounding of one complex division
  for (Eigen::Index n = 0; n < r.state.phi.size(); ++n)
    CHECK(std::abs(std::abs(r.state.phi(n)) - 1.0) <= 2 * std::numeric_limits<double>::epsilon());
}

TEST_CASE("passive phase step on a single element is the grid optimum") {
  oracle::Draw d(13);
  for (int t = 0; t < 5; ++t) {
    const ChannelSet ch = oracle::random_channels(d, 2, 1, 2);
    PowerBudget budget = PowerBudget::uniform(2, 1.0, 1.0, 0.01);
    SolverOptions opts;
    opts.max_outer_iters = 1;
    const SolveResult r = passive_ao_solve(ch, budget, opts);
    PowerBudget pb = budget;
    pb.sigma_r2 = 0.0;
    BeamState probe = r.state;
    double grid_best = INFINITY;
    for (int i = 0; i < 10000; ++i) {
      probe.phi(0) = std::polar(1.0, 2.0 * std::numbers::pi * i / 10000.0);
      grid_best = std::min(grid_best, mse(probe, ch, pb).total);
    }
    CHECK(mse(r.state, ch, pb).total <= grid_best + 1e-12);
  }
}

TEST_CASE("options validation") {
  SolverOptions o;
  o.max_outer_iters = 0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = SolverOptions{};
  o.bisect_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}
