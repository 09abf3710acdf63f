#include "wpr/source_step.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace wpr {

SourceQcqp build_b_qcqp(const IterState& s, const ChannelSet& ch,
                        const SystemParams& p) {
  if (s.b_s.rows() != p.r || s.f.rows() != p.r_R)
    throw Error(ErrorCode::DimensionMismatch, "build_b_qcqp: bad state");
  const double rho = p.rho;
  const CMat fh = s.f * ch.h_rs;                       // r_R x r
  const CMat path = ch.h_dr * fh;                      // r x r, D side
  const CMat wa = s.w * s.a0;
  const CMat core = path.adjoint() * wa * s.w.adjoint() * path;
  const CMat eye_r = CMat::Identity(p.r, p.r);

  SourceQcqp q;
  q.a3_mat = kron(eye_r, (1.0 - rho) * 0.5 * (core + CMat(core.adjoint())));
  q.a2_vec = vec(std::sqrt(1.0 - rho) * path.adjoint() * wa);
  const CMat a4_core = (1.0 - rho) * fh.adjoint() * fh -
                       p.eh_efficiency * rho * ch.h_rs.adjoint() * ch.h_rs;
  q.a4_mat = kron(eye_r, 0.5 * (a4_core + CMat(a4_core.adjoint())));
  const CMat ef_at_r = ch.h_rd * s.q_d.q_d * ch.h_rd.adjoint();
  q.c_b = p.eh_efficiency * rho * ef_at_r.trace().real() -
          (1.0 - rho) * (s.f * ef_at_r * s.f.adjoint()).trace().real() -
          p.sigma_n2 * s.f.squaredNorm();
  q.p_s = p.p_s;
  return q;
}

CMat HomogenizedSdp::phi(const CVec& b_prime, Cplx t) {
  const Eigen::Index n = b_prime.size();
  CVec v(n + 1);
  v.head(n) = b_prime;
  v(n) = t;
  return v * v.adjoint();
}

HomogenizedSdp homogenize(const SourceQcqp& q) {
  const Eigen::Index n = q.a2_vec.size();
  HomogenizedSdp h;
  h.b1 = CMat::Zero(n + 1, n + 1);
  h.b1.topLeftCorner(n, n) = q.a3_mat;
  h.b1.topRightCorner(n, 1) = -q.a2_vec;
  h.b1.bottomLeftCorner(1, n) = -q.a2_vec.adjoint();
  h.b2 = CMat::Zero(n + 1, n + 1);
  h.b2.topLeftCorner(n, n) = q.a4_mat;
  h.b3 = CMat::Zero(n + 1, n + 1);
  h.b3.topLeftCorner(n, n) = CMat::Identity(n, n);
  h.b4 = CMat::Zero(n + 1, n + 1);
  h.b4(n, n) = 1.0;
  h.c_b = q.c_b;
  h.p_s = q.p_s;
  return h;
}

namespace {

// Hermitian basis coefficient layout: diagonal entries first (real), then
// for each off-diagonal pair the symmetric and antisymmetric parts.
CMat delta_from_coeffs(const RVec& coef, Eigen::Index n) {
  CMat d = CMat::Zero(n, n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = coef(idx++);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = coef(idx++);
      const double b = coef(idx++);
      d(i, j) = Cplx(a, -b) * inv_sqrt2;
      d(j, i) = Cplx(a, b) * inv_sqrt2;
    }
  return d;
}

RVec trace_row(const CMat& g, Eigen::Index n) {
  // Row of the linear system: Tr{G Delta} as a function of the Delta
  // coefficients (real because G and Delta are Hermitian).
  RVec row(n * n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) row(idx++) = g(i, i).real();
  const double sqrt2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      row(idx++) = sqrt2 * g(j, i).real();
      row(idx++) = sqrt2 * g(j, i).imag();
    }
  return row;
}

}  // namespace

Rank1Certificate recover_rank1(const CMat& x_opt, const HomogenizedSdp& h) {
  const Eigen::Index n = x_opt.rows();
  CMat x = 0.5 * (x_opt + CMat(x_opt.adjoint()));

  Rank1Certificate cert;
  cert.objective = (h.b1 * x).trace().real();

  const int max_reductions = static_cast<int>(n);
  for (int pass = 0;; ++pass) {
    Eigen::SelfAdjointEigenSolver<CMat> es(x);
    const RVec ev = es.eigenvalues();
    const double lmax = std::max(ev.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if (ev(i) > 1e-9 * lmax) keep.push_back(i);
    const Eigen::Index rank = static_cast<Eigen::Index>(keep.size());

    if (rank <= 1) {
      cert.x = x;
      cert.rank_estimate = static_cast<int>(std::max<Eigen::Index>(rank, 1));
      cert.trace_b2 = (h.b2 * x).trace().real();
      cert.trace_b3 = (h.b3 * x).trace().real();
      cert.trace_b4 = (h.b4 * x).trace().real();
      cert.objective = (h.b1 * x).trace().real();
      cert.reductions = pass;
      return cert;
    }
    if (pass >= max_reductions)
      throw Error(ErrorCode::MaxIterations, "recover_rank1: too many passes");

    CMat v(n, rank);
    for (Eigen::Index k = 0; k < rank; ++k)
      v.col(k) = es.eigenvectors().col(keep[k]) * std::sqrt(ev(keep[k]));

    // Solve Tr{V^H B_m V Delta} = 0 for m = 2,3,4 over Hermitian Delta.
    RMat sys(3, rank * rank);
    sys.row(0) = trace_row(v.adjoint() * h.b2 * v, rank).transpose();
    sys.row(1) = trace_row(v.adjoint() * h.b3 * v, rank).transpose();
    sys.row(2) = trace_row(v.adjoint() * h.b4 * v, rank).transpose();
    Eigen::JacobiSVD<RMat> dec(sys, Eigen::ComputeFullV);
    const RVec null_dir = dec.matrixV().col(rank * rank - 1);
    const double resid = (sys * null_dir).norm();
    const double sys_scale = std::max(1.0, sys.cwiseAbs().maxCoeff());
    if (resid > 1e-6 * sys_scale || null_dir.norm() < 0.5)
      throw Error(ErrorCode::NoNullDirection,
                  "recover_rank1: no nonzero direction solves the trace system");
    // Tie-break: first nonzero coefficient positive.
    RVec coef = null_dir;
    for (Eigen::Index i = 0; i < coef.size(); ++i) {
      if (std::abs(coef(i)) > 1e-12) {
        if (coef(i) < 0) coef = -coef;
        break;
      }
    }
    CMat delta = delta_from_coeffs(coef, rank);

    Eigen::SelfAdjointEigenSolver<CMat> des(delta);
    Eigen::Index k0 = 0;
    des.eigenvalues().cwiseAbs().maxCoeff(&k0);
    const double delta0 = des.eigenvalues()(k0);
    x = v * (CMat::Identity(rank, rank) - delta / delta0) * v.adjoint();
    x = 0.5 * (x + CMat(x.adjoint()));
  }
}

CMat extract_b(const Rank1Certificate& cert, int r) {
  const Eigen::Index n = cert.x.rows();
  if (n != static_cast<Eigen::Index>(r) * r + 1)
    throw Error(ErrorCode::DimensionMismatch, "extract_b: size mismatch");
  Eigen::SelfAdjointEigenSolver<CMat> es(cert.x);
  const RVec ev = es.eigenvalues();
  const double lmax = ev(n - 1);
  if (lmax <= 0.0)
    throw Error(ErrorCode::NotRank1, "extract_b: matrix is zero");
  if (n >= 2 && ev(n - 2) > 1e-6 * lmax)
    throw Error(ErrorCode::NotRank1, "extract_b: second eigenvalue too large");
  CVec u = es.eigenvectors().col(n - 1) * std::sqrt(lmax);
  const Cplx t = u(n - 1);
  if (std::abs(t) < 1e-8)
    throw Error(ErrorCode::NotRank1, "extract_b: homogenization entry ~ 0");
  const CVec b = u.head(n - 1) / t;
  return unvec(b, r, r);
}

bool source_qcqp_feasible(const SourceQcqp& q, double tol) {
  const double lmin = hermitian_eigenvalues(q.a4_mat).minCoeff();
  const double attainable = std::min(0.0, q.p_s * lmin);
  return attainable <= q.c_b + tol;
}

}  // namespace wpr
