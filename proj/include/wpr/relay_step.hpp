#pragma once

#include "wpr/wmse_core.hpp"

namespace wpr {

// Vectorized relay subproblem: min f^H A1 f - 2 Re(f^H a1) subject to
// f^H A2 f <= C_f, with f = vec(F).
struct RelayQcqp {
  CMat a1_mat;   // Hermitian PSD, r_R^2 x r_R^2
  CVec a1_vec;   // linear term
  CMat a2_mat;   // Hermitian PD (contains sigma_n2 I)
  double c_f = 0.0;

  double objective(const CVec& f) const {
    return (f.dot(a1_mat * f)).real() - 2.0 * f.dot(a1_vec).real();
  }
  double constraint(const CVec& f) const {
    return (f.dot(a2_mat * f)).real();
  }
};

RelayQcqp build_f_qcqp(const IterState& state, const ChannelSet& ch,
                       const SystemParams& params);

struct RelaySolution {
  CVec f;
  double xi1 = 0.0;  // multiplier of the power constraint
};

// KKT closed form: minimum-norm pseudo-inverse solution when the constraint
// is slack, otherwise (A1 + xi A2)^{-1} a1 with xi from bisection on the
// strictly decreasing constraint value.
RelaySolution solve_f_closed(const RelayQcqp& q);

}  // namespace wpr
