#include "aircomp/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace aircomp {

void Geometry::validate() const {
  if (K < 1 || M < 1 || N < 1) throw DimensionError("geometry: K, M, N must be >= 1");
  if (user_x[0] > user_x[1] || user_y[0] > user_y[1])
    throw DimensionError("geometry: user region bounds must satisfy lo <= hi");
}

void FadingParams::validate() const {
  if (!(ref_gain > 0.0) || !(ref_distance > 0.0))
    throw std::domain_error("fading: reference gain and distance must be positive");
  for (double beta : {exp_user_ris, exp_user_ap, exp_ris_ap})
    if (!(beta >= 0.0)) throw std::domain_error("fading: path-loss exponents must be >= 0");
  for (double kappa : {kappa_user_ris, kappa_user_ap, kappa_ris_ap})
    if (!(kappa >= 0.0)) throw std::domain_error("fading: Rician factors must be >= 0");
}

void ChannelSet::validate() const {
  const auto K = H_d.cols(), M = H_d.rows(), N = H_r.rows();
  require_dims(H_r.cols() == K, "H_r columns != K");
  require_dims(G.rows() == M && G.cols() == N, "G must be M x N");
  if (H_si) require_dims(H_si->rows() == N && H_si->cols() == N, "H_si must be N x N");
  const bool finite = H_d.allFinite() && H_r.allFinite() && G.allFinite() &&
                      (!H_si || H_si->allFinite());
  if (!finite) throw DimensionError("channel set contains non-finite entries");
}

double path_loss(double distance, const FadingParams& params, double exponent) {
  if (!(distance > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return params.ref_gain * std::pow(distance / params.ref_distance, -exponent);
}

double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

CVec steering_vector(int n, const Point3& from, const Point3& toward) {
  const double az = std::atan2(toward[1] - from[1], toward[0] - from[0]);
  const double step = std::numbers::pi * std::cos(az);
  CVec a(n);
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, step * i);
  return a;
}

CMat los_matrix(int rx_elems, const Point3& rx, int tx_elems, const Point3& tx) {
  // Phases are summed before exponentiating so every entry is a single
  // polar(1, .) value rather than a product of two.
  const double rx_step = std::numbers::pi * std::cos(std::atan2(tx[1] - rx[1], tx[0] - rx[0]));
  const double tx_step = std::numbers::pi * std::cos(std::atan2(rx[1] - tx[1], rx[0] - tx[0]));
  CMat los(rx_elems, tx_elems);
  for (int j = 0; j < tx_elems; ++j)
    for (int i = 0; i < rx_elems; ++i) los(i, j) = std::polar(1.0, rx_step * i - tx_step * j);
  return los;
}

CMat gen_rician_matrix(int rows, int cols, double gain, double kappa, const CMat& los,
                       Rng& rng) {
  require_dims(los.rows() == rows && los.cols() == cols, "LoS matrix shape");
  if (!(gain >= 0.0) || !(kappa >= 0.0))
    throw std::domain_error("gen_rician_matrix: gain and kappa must be >= 0");
  const double amp = std::sqrt(gain);
  if (kappa >= kPureLosKappa) return amp * los;

  const double w_los = std::sqrt(kappa / (1.0 + kappa));
  const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
  CMat out(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      out(i, j) = amp * (w_los * los(i, j) + w_nlos * rng.complex_normal(1.0));
  return out;
}

ChannelSet gen_channels(const Geometry& geometry, const FadingParams& params,
                        std::uint64_t seed) {
  geometry.validate();
  params.validate();
  const int K = geometry.K, M = geometry.M, N = geometry.N;
  Rng rng(seed);

  std::vector<Point3> users(K);
  for (auto& u : users) {
    u[0] = rng.uniform(geometry.user_x[0], geometry.user_x[1]);
    u[1] = rng.uniform(geometry.user_y[0], geometry.user_y[1]);
    u[2] = geometry.user_z;
  }

  const Point3& ap = geometry.ap_position;
  const Point3& ris = geometry.ris_position;
  ChannelSet ch;
  ch.H_d.resize(M, K);
  ch.H_r.resize(N, K);
  for (int k = 0; k < K; ++k) {
    const double g_ua = path_loss(distance(users[k], ap), params, params.exp_user_ap);
    ch.H_d.col(k) = gen_rician_matrix(M, 1, g_ua, params.kappa_user_ap,
                                      los_matrix(M, ap, 1, users[k]), rng);
  }
  for (int k = 0; k < K; ++k) {
    const double g_ur = path_loss(distance(users[k], ris), params, params.exp_user_ris);
    ch.H_r.col(k) = gen_rician_matrix(N, 1, g_ur, params.kappa_user_ris,
                                      los_matrix(N, ris, 1, users[k]), rng);
  }
  const double g_ra = path_loss(distance(ris, ap), params, params.exp_ris_ap);
  ch.G = gen_rician_matrix(M, N, g_ra, params.kappa_ris_ap, los_matrix(M, ap, N, ris), rng);
  return ch;
}

CMat gen_si_channel(int N, double eta_sq, std::uint64_t seed) {
  if (N < 1) throw DimensionError("gen_si_channel: N must be >= 1");
  if (!(eta_sq >= 0.0)) throw std::domain_error("gen_si_channel: variance must be >= 0");
  if (eta_sq == 0.0) return CMat::Zero(N, N);
  Rng rng(seed);
  CMat H(N, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) H(i, j) = rng.complex_normal(eta_sq);
  return H;
}

ChannelSet gen_rayleigh_channels(int M, int N, int K, double rho_r_sq, double rho_g_sq,
                                 std::uint64_t seed) {
  if (K < 1 || M < 1 || N < 1) throw DimensionError("K, M, N must be >= 1");
  Rng rng(seed);
  ChannelSet ch;
  ch.H_d = CMat::Zero(M, K);
  ch.H_r.resize(N, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) ch.H_r(n, k) = rng.complex_normal(rho_r_sq);
  ch.G.resize(M, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i) ch.G(i, j) = rng.complex_normal(rho_g_sq);
  return ch;
}

}  // namespace aircomp
