#pragma once

#include "wpr/sdp_core.hpp"
#include "wpr/wmse_core.hpp"

namespace wpr {

// Vectorized source subproblem: min b^H A3 b - 2 Re(b^H a2) subject to
// b^H A4 b <= C_b (relay power, A4 indefinite) and b^H b <= P_S.
struct SourceQcqp {
  CMat a3_mat;  // Hermitian PSD, r^2 x r^2
  CVec a2_vec;
  CMat a4_mat;  // Hermitian, generally indefinite
  double c_b = 0.0;
  double p_s = 0.0;

  double objective(const CVec& b) const {
    return (b.dot(a3_mat * b)).real() - 2.0 * b.dot(a2_vec).real();
  }
  double relay_constraint(const CVec& b) const {
    return (b.dot(a4_mat * b)).real();
  }
};

SourceQcqp build_b_qcqp(const IterState& state, const ChannelSet& ch,
                        const SystemParams& params);

// Homogenized data: size (r^2+1) Hermitian blocks with the auxiliary phase
// variable appended last.
struct HomogenizedSdp {
  CMat b1, b2, b3, b4;
  double c_b = 0.0;
  double p_s = 0.0;

  // Phi(b', t) = [b' ; t] [b' ; t]^H
  static CMat phi(const CVec& b_prime, Cplx t);
};

HomogenizedSdp homogenize(const SourceQcqp& q);

struct Rank1Certificate {
  CMat x;
  int rank_estimate = 1;
  double trace_b2 = 0.0;
  double trace_b3 = 0.0;
  double trace_b4 = 0.0;
  double objective = 0.0;
  int reductions = 0;
};

// Face-walking rank reduction: factor X = V V^H, pick a Hermitian direction
// that annihilates the three constraint traces, step to the boundary with
// the largest-magnitude eigenvalue. Each pass drops the rank by at least
// one and leaves feasibility and the optimal objective untouched.
Rank1Certificate recover_rank1(const CMat& x_opt, const HomogenizedSdp& h);

// Pull B_S out of a rank-1 certificate (dominant eigenpair, phase fixed by
// the homogenization entry).
CMat extract_b(const Rank1Certificate& cert, int r);

// Feasibility of the source subproblem: there is a b in the power ball with
// b^H A4 b <= C_b iff min(0, P_S * lambda_min(A4)) <= C_b.
bool source_qcqp_feasible(const SourceQcqp& q, double tol = 1e-12);

}  // namespace wpr
