#include "aircomp/asymptotics.hpp"

#include <numbers>
#include <stdexcept>

#include "aircomp/ao_solver.hpp"
#include "aircomp/rng.hpp"

namespace aircomp {

namespace {

constexpr double kPi = std::numbers::pi;

// sigma_r2 sigma_a2 + users * P0 rho_r2 sigma_a2 + P_r rho_g2 sigma_r2
double active_numerator(const AsymptoticParams& p, double users) {
  return p.sigma_r2 * p.sigma_a2 + users * p.P0 * p.rho_r2 * p.sigma_a2 +
         p.P_r * p.rho_g2 * p.sigma_r2;
}

double link_gain(const AsymptoticParams& p) { return p.rho_r2 * p.rho_g2; }

BeamState random_phase_config(const ChannelSet& ch, const PowerBudget& budget, double alpha,
                              std::uint64_t seed) {
  Rng rng(seed);
  BeamState s;
  s.b = budget.P.cwiseSqrt().cast<cd>();
  s.phi.resize(ch.N());
  for (int n = 0; n < ch.N(); ++n) s.phi(n) = std::polar(alpha, rng.phase());
  s.m = update_m(equivalent_channels(ch, s.phi), s.b, ch.G, s.phi, budget);
  return s;
}

}  // namespace

void AsymptoticParams::validate() const {
  if (N < 1 || K < 1) throw std::invalid_argument("asymptotic params: N and K must be >= 1");
  for (double x : {P0, P0_passive, P_r, sigma_a2, sigma_r2, rho_r2, rho_g2})
    if (!(x > 0.0)) throw std::invalid_argument("asymptotic params: powers and variances must be > 0");
}

AsymptoticParams AsymptoticParams::reference() {
  AsymptoticParams p;
  p.P0 = 1.0;
  p.P0_passive = 2.0;
  p.P_r = 1.0;
  p.sigma_a2 = p.sigma_r2 = db_to_linear(-100.0);
  p.rho_r2 = p.rho_g2 = db_to_linear(-70.0);
  return p;
}

double mse_active_susiso(const AsymptoticParams& p) {
  return 16.0 / (kPi * kPi * p.N) * active_numerator(p, 1.0) / (p.P_r * p.P0 * link_gain(p));
}

double mse_passive_susiso(const AsymptoticParams& p) {
  const double n2 = static_cast<double>(p.N) * p.N;
  return 16.0 / (kPi * kPi * n2) * p.sigma_a2 / (p.P0_passive * link_gain(p));
}

double mse_active_musimo(const AsymptoticParams& p) {
  return active_numerator(p, p.K) / (static_cast<double>(p.K) * p.N * p.P_r * p.P0 * link_gain(p));
}

double mse_passive_musimo(const AsymptoticParams& p) {
  const double n2 = static_cast<double>(p.N) * p.N;
  return p.sigma_a2 / (p.K * n2 * p.P0_passive * link_gain(p));
}

double n_threshold_susiso(const AsymptoticParams& p) {
  return p.P0 / p.P0_passive * p.P_r * p.sigma_a2 / active_numerator(p, 1.0);
}

double n_threshold_musimo(const AsymptoticParams& p) {
  return p.P0 / p.P0_passive * p.P_r * p.sigma_a2 / active_numerator(p, p.K);
}

CVec SusisoSolution::phi() const {
  CVec out(omega.size());
  for (Eigen::Index n = 0; n < omega.size(); ++n) out(n) = std::polar(alpha, omega(n));
  return out;
}

SusisoSolution susiso_closed_form(const CVec& h_r, const CVec& g, const AsymptoticParams& p,
                                  bool active) {
  require_dims(h_r.size() == g.size() && h_r.size() > 0, "h_r and g must have equal, nonzero length");
  const auto N = h_r.size();
  SusisoSolution s;
  s.omega.resize(N);
  for (Eigen::Index n = 0; n < N; ++n) s.omega(n) = std::arg(g(n)) - std::arg(h_r(n));
  if (active) {
    s.b = std::sqrt(p.P0);
    s.alpha = std::sqrt(p.P_r / (p.P0 * h_r.squaredNorm() + static_cast<double>(N) * p.sigma_r2));
  } else {
    s.b = std::sqrt(p.P0_passive);
    s.alpha = 1.0;
  }
  return s;
}

double susiso_exact_mse(const CVec& h_r, const CVec& g, const AsymptoticParams& p, bool active) {
  const SusisoSolution s = susiso_closed_form(h_r, g, p, active);
  const double e = g.cwiseAbs().dot(h_r.cwiseAbs());
  if (!active) return p.sigma_a2 / (p.sigma_a2 + p.P0_passive * e * e);
  const double a2 = s.alpha * s.alpha;
  const double noise = p.sigma_a2 + a2 * p.sigma_r2 * g.squaredNorm();
  return noise / (noise + a2 * p.P0 * e * e);
}

ChannelSet susiso_channels(const CVec& h_r, const CVec& g) {
  require_dims(h_r.size() == g.size(), "h_r and g must have equal length");
  ChannelSet ch;
  ch.H_d = CMat::Zero(1, 1);
  ch.H_r = h_r;
  ch.G = g.adjoint();
  return ch;
}

PowerBudget susiso_budget(const AsymptoticParams& p, bool active) {
  if (active) return {RVec::Constant(1, p.P0), p.P_r, p.sigma_a2, p.sigma_r2};
  return {RVec::Constant(1, p.P0_passive), p.P_r, p.sigma_a2, 0.0};
}

PowerBudget musimo_budget(const AsymptoticParams& p, bool active) {
  if (active) return {RVec::Constant(p.K, p.P0), p.P_r, p.sigma_a2, p.sigma_r2};
  return {RVec::Constant(p.K, p.P0_passive), p.P_r, p.sigma_a2, 0.0};
}

BeamState musimo_asymptotic_config(const ChannelSet& ch, const AsymptoticParams& p,
                                   std::uint64_t seed) {
  require_dims(ch.K() == p.K && ch.N() == p.N, "channel dimensions must match the parameters");
  const double alpha2 = p.P_r / (p.N * (p.sigma_r2 + p.K * p.P0 * p.rho_r2));
  return random_phase_config(ch, musimo_budget(p, true), std::sqrt(alpha2), seed);
}

BeamState musimo_passive_config(const ChannelSet& ch, const AsymptoticParams& p,
                                std::uint64_t seed) {
  require_dims(ch.K() == p.K && ch.N() == p.N, "channel dimensions must match the parameters");
  return random_phase_config(ch, musimo_budget(p, false), 1.0, seed);
}

}  // namespace aircomp
