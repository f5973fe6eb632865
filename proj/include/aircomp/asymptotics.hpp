#pragma once

#include <cstdint>

#include "aircomp/mse.hpp"

namespace aircomp {

struct AsymptoticParams {
  int N = 1;
  int K = 1;
  double P0 = 1.0;        // per-user power, active system (W)
  double P0_passive = 2.0;  // per-user power, passive system (W)
  double P_r = 1.0;
  double sigma_a2 = 1e-10;
  double sigma_r2 = 1e-10;
  double rho_r2 = 1e-7;  // user-RIS per-entry variance
  double rho_g2 = 1e-7;  // RIS-AP per-entry variance

  void validate() const;
  // sigma_a2 = sigma_r2 = -100 dB, rho^2 = -70 dB, P0 = P_r = 1 W, passive P0 = 2 W.
  static AsymptoticParams reference();
};

// Large-N MSE predictors. SU-SISO ignores K.
double mse_active_susiso(const AsymptoticParams& p);
double mse_passive_susiso(const AsymptoticParams& p);
double mse_active_musimo(const AsymptoticParams& p);
double mse_passive_musimo(const AsymptoticParams& p);

// Element count at which the passive prediction drops to the active one.
double n_threshold_susiso(const AsymptoticParams& p);
double n_threshold_musimo(const AsymptoticParams& p);

struct SusisoSolution {
  double b = 0.0;
  RVec omega;  // phase of each element (rad)
  double alpha = 1.0;
  CVec phi() const;  // alpha * exp(j omega)
};

// Single-user, single-antenna link h_d = 0 with RIS-AP row g^H.
SusisoSolution susiso_closed_form(const CVec& h_r, const CVec& g, const AsymptoticParams& p,
                                  bool active);
double susiso_exact_mse(const CVec& h_r, const CVec& g, const AsymptoticParams& p, bool active);

// ChannelSet (K = M = 1, H_d = 0, G = g^H) and budget matching p.
ChannelSet susiso_channels(const CVec& h_r, const CVec& g);
PowerBudget susiso_budget(const AsymptoticParams& p, bool active);

// b_k = sqrt(P0), i.i.d. uniform phases with alpha^2 = P_r / (N (sigma_r2 + K P0 rho_r2)),
// m from update_m. The passive variant uses unit amplitude, passive P0 and no RIS noise.
BeamState musimo_asymptotic_config(const ChannelSet& ch, const AsymptoticParams& p,
                                   std::uint64_t seed);
BeamState musimo_passive_config(const ChannelSet& ch, const AsymptoticParams& p,
                                std::uint64_t seed);
PowerBudget musimo_budget(const AsymptoticParams& p, bool active);

}  // namespace aircomp
