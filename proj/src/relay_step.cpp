#include "wpr/relay_step.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace wpr {

RelayQcqp build_f_qcqp(const IterState& s, const ChannelSet& ch,
                       const SystemParams& p) {
  if (s.b_s.rows() != p.r || s.f.rows() != p.r_R)
    throw Error(ErrorCode::DimensionMismatch, "build_f_qcqp: bad state");
  const double rho = p.rho;
  const CMat hb = ch.h_rs * s.b_s;                        // r_R x r
  const CMat sig_s = (1.0 - rho) * hb * hb.adjoint();     // signal at R
  const CMat wa = s.w * s.a0;                             // r x r
  const CMat recv = ch.h_dr.adjoint() * wa * s.w.adjoint() * ch.h_dr;
  const CMat sig_d = ch.h_rd * s.q_d.q_d * ch.h_rd.adjoint();

  RelayQcqp q;
  const CMat left1 =
      sig_s.transpose() + p.sigma_n2 * CMat::Identity(p.r_R, p.r_R);
  q.a1_mat = kron(left1, 0.5 * (recv + CMat(recv.adjoint())));
  q.a1_mat = 0.5 * (q.a1_mat + CMat(q.a1_mat.adjoint()));
  q.a1_vec =
      vec(std::sqrt(1.0 - rho) * ch.h_dr.adjoint() * wa * hb.adjoint());
  const CMat left2 = (sig_s + (1.0 - rho) * sig_d +
                      p.sigma_n2 * CMat::Identity(p.r_R, p.r_R))
                         .transpose();
  q.a2_mat = kron(left2, CMat::Identity(p.r_R, p.r_R));
  q.a2_mat = 0.5 * (q.a2_mat + CMat(q.a2_mat.adjoint()));
  q.c_f = p.eh_efficiency * rho *
          (sig_d.trace().real() + (hb * hb.adjoint()).trace().real());
  return q;
}

RelaySolution solve_f_closed(const RelayQcqp& q) {
  const Eigen::Index n = q.a1_vec.size();
  if (q.c_f < 0)
    throw Error(ErrorCode::InfeasibleBudget, "solve_f_closed: C_f < 0");
  const double a1_norm = q.a1_vec.norm();
  if (a1_norm == 0.0 || q.c_f == 0.0)
    return RelaySolution{CVec::Zero(n), 0.0};

  // Slack branch: minimum-norm stationary point, constraint inactive.
  Eigen::SelfAdjointEigenSolver<CMat> es1(q.a1_mat);
  const RVec d1 = es1.eigenvalues();
  const double d1max = std::max(d1.maxCoeff(), 0.0);
  const CVec proj = es1.eigenvectors().adjoint() * q.a1_vec;
  CVec scaled = proj;
  for (Eigen::Index i = 0; i < n; ++i)
    scaled(i) = (d1(i) > 1e-12 * std::max(d1max, 1e-300))
                    ? proj(i) / d1(i)
                    : Cplx(0, 0);
  const CVec f0 = es1.eigenvectors() * scaled;
  const bool in_colspace =
      (q.a1_mat * f0 - q.a1_vec).norm() <= 1e-8 * a1_norm;
  if (in_colspace && q.constraint(f0) < q.c_f)
    return RelaySolution{f0, 0.0};

  // Active branch: whiten by A2 so the multiplier search is a scalar
  // root-find on phi(xi) = sum |c_i|^2 / (d_i + xi)^2 = C_f.
  Eigen::LLT<CMat> llt(q.a2_mat);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::DimensionMismatch, "solve_f_closed: A2 not PD");
  const CMat l = llt.matrixL();
  const CMat a1w = l.triangularView<Eigen::Lower>().solve(
      CMat(l.triangularView<Eigen::Lower>()
               .solve(q.a1_mat)
               .adjoint()));  // L^{-1} A1 L^{-H}
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a1w + CMat(a1w.adjoint())));
  const RVec d = es.eigenvalues().cwiseMax(0.0);
  const CVec c = es.eigenvectors().adjoint() *
                 l.triangularView<Eigen::Lower>().solve(q.a1_vec);

  const auto phi = [&](double xi) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double den = d(i) + xi;
      acc += std::norm(c(i)) / (den * den);
    }
    return acc;
  };

  double hi = 1.0;
  int doublings = 0;
  while (phi(hi) >= q.c_f && doublings++ < 2000) hi *= 2.0;
  double lo = 0.0;
  double xi = hi;
  for (int iter = 0; iter < 400; ++iter) {
    xi = 0.5 * (lo + hi);
    const double val = phi(xi);
    if (std::abs(val - q.c_f) < 1e-10 * q.c_f) break;
    if (val > q.c_f)
      lo = xi;
    else
      hi = xi;
    if ((hi - lo) < 1e-12 * std::max(hi, 1.0)) {
      xi = 0.5 * (lo + hi);
      break;
    }
  }

  CVec g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = c(i) / (d(i) + xi);
  const CVec f = l.adjoint().triangularView<Eigen::Upper>().solve(
      CVec(es.eigenvectors() * g));
  return RelaySolution{f, xi};
}

}  // namespace wpr
