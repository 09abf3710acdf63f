#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wpr/matrix_kit.hpp"

namespace wpr {

// Small dense Hermitian SDP:
//   min Tr{cost X}  s.t.  Tr{A_i X} <= b_i,  Tr{E_j X} = v_j,  X >= 0.
struct SdpProblem {
  CMat cost;
  std::vector<std::pair<CMat, double>> ineq;
  std::vector<std::pair<CMat, double>> eq;

  Eigen::Index dimension() const { return cost.rows(); }
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, MaxIter };

struct SdpSolution {
  CMat x;
  std::vector<double> ineq_duals;  // >= 0
  std::vector<double> eq_duals;    // free
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  SdpStatus status = SdpStatus::MaxIter;
  int iterations = 0;
  // Barrier merit (complementarity plus residual norms) per iteration;
  // non-increasing up to the line-search tolerance.
  std::vector<double> mu_trace;
};

struct SdpOptions {
  double tol_gap = 1e-9;   // relative duality gap
  double tol_feas = 1e-9;  // relative primal/dual feasibility
  int max_iter = 200;
  double step_fraction = 0.98;  // fraction-to-boundary
};

// Primal-dual interior point (HKM direction, Mehrotra corrector) on the
// real symmetric embedding of the complex problem. Inequalities become
// scalar slack blocks. Deterministic: scaled-identity start, no randomness,
// so a given problem always returns the same solution.
SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opts = {});

struct KktReport {
  double primal_ineq = 0.0;   // max positive violation of Tr{A_i X} <= b_i
  double primal_eq = 0.0;     // max |Tr{E_j X} - v_j|
  double primal_psd = 0.0;    // max(0, -lambda_min(X))
  double dual_psd = 0.0;      // max(0, -lambda_min(cost + sum duals * mats))
  double dual_sign = 0.0;     // max(0, -lambda_i)
  double compl_xz = 0.0;      // ||X Z||_F
  double compl_ineq = 0.0;    // max |lambda_i (Tr{A_i X} - b_i)|
  double duality_gap = 0.0;   // |primal - dual|

  double worst() const;
};

KktReport kkt_residuals(const SdpProblem& p, const SdpSolution& s);

// Plain-text dump (and its reader) for cross-checking with other solvers.
void dump_problem(const SdpProblem& p, const std::string& path);
SdpProblem parse_problem(const std::string& path);

}  // namespace wpr
