#pragma once

#include <string>
#include <vector>

#include "aircomp/channel_model.hpp"

namespace aircomp {

// Optimization variables: AP combiner m (M), user coefficients b (K) and the
// diagonal phi (N) of the RIS reflection matrix.
struct BeamState {
  CVec m;
  CVec b;
  CVec phi;

  bool all_finite() const { return m.allFinite() && b.allFinite() && phi.allFinite(); }
};

struct PowerBudget {
  RVec P;               // per-user max power (W)
  double P_r = 1.0;     // RIS max power (W)
  double sigma_a2 = 1e-10;
  double sigma_r2 = 1e-10;  // 0 models a noiseless (passive) RIS

  void validate(int K) const;

  static PowerBudget uniform(int K, double P_user, double P_r, double noise) {
    return {RVec::Constant(K, P_user), P_r, noise, noise};
  }
};

struct MseBreakdown {
  double misalignment = 0.0;
  double ris_noise = 0.0;
  double ap_noise = 0.0;
  double total = 0.0;
};

// Column k: h_d,k + G diag(phi) h_r,k.
CMat equivalent_channels(const ChannelSet& ch, const CVec& phi);
// Column k: h_d,k + G R h_r,k for an arbitrary N x N RIS response R.
CMat equivalent_channels_general(const ChannelSet& ch, const CMat& ris_response);

MseBreakdown mse(const BeamState& state, const ChannelSet& ch, const PowerBudget& budget);
// Same three terms with diag(phi) replaced by `ris_response`; state.phi is ignored.
MseBreakdown mse_general(const BeamState& state, const ChannelSet& ch,
                         const PowerBudget& budget, const CMat& ris_response);

// Transmit power of the RIS: sum_k |b_k|^2 ||diag(phi) h_r,k||^2 + sigma_r2 ||phi||^2.
double ris_tx_power(const CVec& b, const CVec& phi, const CMat& H_r, double sigma_r2);
double ris_tx_power_general(const CVec& b, const CMat& ris_response, const CMat& H_r,
                            double sigma_r2);

struct Violation {
  enum class Kind { User, Ris };
  Kind kind;
  int index;     // user index, or -1 for the RIS
  double value;  // consumed power (W)
  double limit;  // budget (W)
  double excess() const { return value / limit; }
  std::string describe() const;
};

inline constexpr double kFeasibilityTol = 1e-8;

// Empty iff every |b_k|^2 <= P_k(1+tol) and the RIS power <= P_r(1+tol).
std::vector<Violation> check_feasible(const BeamState& state, const ChannelSet& ch,
                                      const PowerBudget& budget, double tol = kFeasibilityTol);
std::vector<Violation> check_feasible_general(const BeamState& state, const ChannelSet& ch,
                                              const PowerBudget& budget,
                                              const CMat& ris_response,
                                              double tol = kFeasibilityTol);

// First-order self-interference response (I + diag(phi) H) diag(phi).
CMat effective_phi_si(const CVec& phi, const CMat& H_si);

}  // namespace aircomp
