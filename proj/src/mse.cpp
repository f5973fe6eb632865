#include "aircomp/mse.hpp"

#include <sstream>

namespace aircomp {

namespace {

void check_state(const BeamState& s, const ChannelSet& ch) {
  require_dims(s.m.size() == ch.M(), "m must have M entries");
  require_dims(s.b.size() == ch.K(), "b must have K entries");
}

MseBreakdown assemble(const BeamState& s, const CMat& He, const CVec& ris_row_energy,
                      const PowerBudget& budget) {
  const int K = static_cast<int>(He.cols());
  const double inv_k = 1.0 / K;
  MseBreakdown out;
  const CVec g = (He.adjoint() * s.m).conjugate();  // g_k = m^H h_e,k
  for (int k = 0; k < K; ++k) out.misalignment += std::norm(g(k) * s.b(k) - inv_k);
  out.ris_noise = budget.sigma_r2 * ris_row_energy.squaredNorm();
  out.ap_noise = budget.sigma_a2 * s.m.squaredNorm();
  out.total = out.misalignment + out.ris_noise + out.ap_noise;
  return out;
}

}  // namespace

void PowerBudget::validate(int K) const {
  require_dims(P.size() == K, "power budget must have K user entries");
  if (!((P.array() > 0.0).all()) || !(P_r > 0.0) || !(sigma_a2 > 0.0) || !(sigma_r2 >= 0.0))
    throw std::domain_error("power budget: powers and sigma_a2 must be > 0, sigma_r2 >= 0");
}

CMat equivalent_channels(const ChannelSet& ch, const CVec& phi) {
  require_dims(phi.size() == ch.N(), "phi must have N entries");
  return ch.H_d + ch.G * (phi.asDiagonal() * ch.H_r);
}

CMat equivalent_channels_general(const ChannelSet& ch, const CMat& ris_response) {
  require_dims(ris_response.rows() == ch.N() && ris_response.cols() == ch.N(),
               "RIS response must be N x N");
  return ch.H_d + ch.G * (ris_response * ch.H_r);
}

MseBreakdown mse(const BeamState& state, const ChannelSet& ch, const PowerBudget& budget) {
  check_state(state, ch);
  const CMat He = equivalent_channels(ch, state.phi);
  // m^H G diag(phi) = (G^H m)^* .* phi entrywise (up to conjugation).
  const CVec row = (ch.G.adjoint() * state.m).cwiseProduct(state.phi.conjugate());
  return assemble(state, He, row, budget);
}

MseBreakdown mse_general(const BeamState& state, const ChannelSet& ch,
                         const PowerBudget& budget, const CMat& ris_response) {
  check_state(state, ch);
  const CMat He = equivalent_channels_general(ch, ris_response);
  const CVec row = ris_response.adjoint() * (ch.G.adjoint() * state.m);
  return assemble(state, He, row, budget);
}

double ris_tx_power(const CVec& b, const CVec& phi, const CMat& H_r, double sigma_r2) {
  require_dims(phi.size() == H_r.rows() && b.size() == H_r.cols(), "ris_tx_power shapes");
  double p = 0.0;
  const RVec phi2 = phi.cwiseAbs2();
  for (Eigen::Index k = 0; k < H_r.cols(); ++k)
    p += std::norm(b(k)) * phi2.dot(H_r.col(k).cwiseAbs2());
  return p + sigma_r2 * phi2.sum();
}

double ris_tx_power_general(const CVec& b, const CMat& ris_response, const CMat& H_r,
                            double sigma_r2) {
  require_dims(ris_response.rows() == H_r.rows() && ris_response.cols() == H_r.rows() &&
                   b.size() == H_r.cols(),
               "ris_tx_power_general shapes");
  const CMat reflected = ris_response * H_r;
  double p = 0.0;
  for (Eigen::Index k = 0; k < H_r.cols(); ++k)
    p += std::norm(b(k)) * reflected.col(k).squaredNorm();
  return p + sigma_r2 * ris_response.squaredNorm();
}

std::string Violation::describe() const {
  std::ostringstream os;
  if (kind == Kind::User)
    os << "user " << index;
  else
    os << "RIS";
  os << " power " << value << " W exceeds " << limit << " W (x" << excess() << ")";
  return os.str();
}

namespace {

std::vector<Violation> user_violations(const CVec& b, const PowerBudget& budget, double tol) {
  std::vector<Violation> out;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double pk = std::norm(b(k));
    if (pk > budget.P(k) * (1.0 + tol))
      out.push_back({Violation::Kind::User, static_cast<int>(k), pk, budget.P(k)});
  }
  return out;
}

}  // namespace

std::vector<Violation> check_feasible(const BeamState& state, const ChannelSet& ch,
                                      const PowerBudget& budget, double tol) {
  auto out = user_violations(state.b, budget, tol);
  const double pr = ris_tx_power(state.b, state.phi, ch.H_r, budget.sigma_r2);
  if (pr > budget.P_r * (1.0 + tol)) out.push_back({Violation::Kind::Ris, -1, pr, budget.P_r});
  return out;
}

std::vector<Violation> check_feasible_general(const BeamState& state, const ChannelSet& ch,
                                              const PowerBudget& budget,
                                              const CMat& ris_response, double tol) {
  auto out = user_violations(state.b, budget, tol);
  const double pr = ris_tx_power_general(state.b, ris_response, ch.H_r, budget.sigma_r2);
  if (pr > budget.P_r * (1.0 + tol)) out.push_back({Violation::Kind::Ris, -1, pr, budget.P_r});
  return out;
}

CMat effective_phi_si(const CVec& phi, const CMat& H_si) {
  const auto N = phi.size();
  require_dims(H_si.rows() == N && H_si.cols() == N, "H_si must be N x N");
  CMat psi = phi.asDiagonal() * H_si;  // diag(phi) H
  psi.diagonal().array() += 1.0;
  return psi * phi.asDiagonal();
}

}  // namespace aircomp
