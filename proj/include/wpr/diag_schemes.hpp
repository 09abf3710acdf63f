#pragma once

#include <vector>

#include "wpr/wmse_core.hpp"

namespace wpr {

// Joint decomposition for r = r_R: transmit eigenmodes of the forwarding
// channel, receive eigenmodes aligned so the energy flow lands on the mode
// with the smallest amplification gain.
struct DiagDecomposition {
  CMat u_dr;            // left singular vectors of H_{D,R}
  CMat v_dr;            // right singular vectors of H_{D,R}
  RVec lambda_dr;       // squared singular values, ascending
  double lambda_dr_max = 0.0;
  CMat u_rs_tilde;      // receive eigenmodes at R: conj(V_DR) (P_pi = I)
  CMat h_e;             // (u_rs_tilde^H H_RS)^{-1}
  RVec col_weight;      // ||h_e,m||^2 per column
};

// Diagonal-domain powers and multipliers.
struct PowerAllocation {
  RVec lambda_f;    // relay amplification gains
  RVec lambda_rs;   // effective source channel gains
  RVec beta;        // energy-flow leakage; single entry c at the last index
  double nu = 0.0;      // relay budget multiplier
  double mu = 0.0;      // source equality multiplier
  double gamma2 = 0.0;  // source budget multiplier
};

DiagDecomposition hpm_plm_decompose(const ChannelSet& ch,
                                    const SystemParams& params);

// Objective of the diagonalized high-SNR problem (to be minimized).
double diag_objective(const RVec& lambda_f, const RVec& lambda_rs,
                      const RVec& lambda_dr, const SystemParams& params);
// Exact per-mode rate in bits (matches the matrix-level rate on the
// reconstructed matrices).
double diag_rate_bits(const RVec& lambda_f, const RVec& lambda_rs,
                      const RVec& lambda_dr, const SystemParams& params);

// Water-filling over the forwarding modes; nu from bisection on the power
// budget equality. Output gains are positive and, under the ascending
// pairing, descending.
PowerAllocation relay_water_fill(const PowerAllocation& alloc,
                                 const DiagDecomposition& decomp,
                                 const SystemParams& params);

// Exhaustive test oracle over all pairings and leakage placements (r <= 5).
struct PairingResult {
  std::vector<int> perm;  // position m takes base gain l[perm[m]]
  int leak_index = 0;     // which l entry carries the leakage c
  double objective = 0.0;
};
PairingResult best_pairing_bruteforce(const RVec& lambda_dr, const RVec& l,
                                      double c, const SystemParams& params);

// Full source power problem: max sum log(lambda_rs) with the ordering
// constraint, weighted budget and the relay equality. Deterministic
// primal-dual interior point.
PowerAllocation source_power_full(const PowerAllocation& alloc,
                                  const DiagDecomposition& decomp,
                                  const SystemParams& params);

// Closed-form variant with the uniform max-weight budget.
PowerAllocation source_power_simplified(const PowerAllocation& alloc,
                                        const DiagDecomposition& decomp,
                                        const SystemParams& params);

enum class EfaVariant { S1, S2 };

struct DiagResult {
  PowerAllocation alloc;
  double rate_bits = 0.0;
  std::vector<double> c_trace;  // objective after each source update
  int iterations = 0;
  bool converged = true;
  CMat f;    // reconstructed relay matrix
  CMat b_s;  // reconstructed source precoder
};

DiagResult run_efa_s(const ChannelSet& ch, const SystemParams& params,
                     EfaVariant variant, double tol = 1e-4,
                     int max_iters = 200);

DiagResult run_nefa_s(const ChannelSet& ch, const SystemParams& params);

// Mean received power at D including the cancellable energy-flow component.
double forwarded_signal_power(const PowerAllocation& alloc,
                              const DiagDecomposition& decomp,
                              const SystemParams& params, const CMat& q_d);

}  // namespace wpr
