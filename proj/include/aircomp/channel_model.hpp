#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "aircomp/linalg.hpp"
#include "aircomp/rng.hpp"

namespace aircomp {

using Point3 = std::array<double, 3>;

// Node placement and array sizes for one scenario. Users are dropped
// uniformly in an axis-aligned rectangle at fixed height.
struct Geometry {
  Point3 ap_position{-50.0, 0.0, 10.0};
  Point3 ris_position{0.0, 0.0, 10.0};
  std::array<double, 2> user_x{0.0, 20.0};
  std::array<double, 2> user_y{-10.0, 10.0};
  double user_z = 0.0;
  int K = 1;  // users
  int M = 1;  // AP antennas
  int N = 1;  // RIS elements

  void validate() const;
};

// Large- and small-scale fading parameters, all linear.
struct FadingParams {
  double ref_gain = 1e-3;  // path gain at ref_distance (30 dB loss)
  double ref_distance = 1.0;
  double exp_user_ris = 2.8;
  double exp_user_ap = 3.6;
  double exp_ris_ap = 2.2;
  double kappa_user_ris = 0.0;  // Rayleigh
  double kappa_user_ap = 0.0;
  double kappa_ris_ap = db_to_linear(3.0);

  void validate() const;
};

// One channel realization. Column k of H_d / H_r belongs to user k.
struct ChannelSet {
  CMat H_d;  // M x K, user -> AP
  CMat H_r;  // N x K, user -> RIS
  CMat G;    // M x N, RIS -> AP
  std::optional<CMat> H_si;  // N x N RIS self-interference

  int K() const { return static_cast<int>(H_d.cols()); }
  int M() const { return static_cast<int>(H_d.rows()); }
  int N() const { return static_cast<int>(H_r.rows()); }

  // Throws DimensionError on inconsistent shapes or non-finite entries.
  void validate() const;
};

// Rician factor at or above this is treated as pure line of sight.
inline constexpr double kPureLosKappa = 1e12;

double path_loss(double distance, const FadingParams& params, double exponent);

double distance(const Point3& a, const Point3& b);

// Half-wavelength ULA steering vector along the x axis:
// a_n = exp(j*pi*n*cos(az)), az the azimuth of `toward - from`.
CVec steering_vector(int n, const Point3& from, const Point3& toward);

// Unit-modulus line-of-sight matrix a_rx * a_tx^H between two nodes.
CMat los_matrix(int rx_elems, const Point3& rx, int tx_elems, const Point3& tx);

// sqrt(gain) * (sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * W), W ~ CN(0,1) i.i.d.
CMat gen_rician_matrix(int rows, int cols, double gain, double kappa, const CMat& los,
                       Rng& rng);

// Draws user positions and all three links from `seed`.
ChannelSet gen_channels(const Geometry& geometry, const FadingParams& params,
                        std::uint64_t seed);

// N x N i.i.d. CN(0, eta_sq) self-interference channel.
CMat gen_si_channel(int N, double eta_sq, std::uint64_t seed);

// Pure Rayleigh channels with per-entry variances rho_r_sq (user-RIS) and
// rho_g_sq (RIS-AP); H_d is zero. Used by the asymptotic scenarios.
ChannelSet gen_rayleigh_channels(int M, int N, int K, double rho_r_sq, double rho_g_sq,
                                 std::uint64_t seed);

}  // namespace aircomp
