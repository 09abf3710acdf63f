#include "wpr/wmse_core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace wpr {

namespace {

void check_dims(const IterState& s, const ChannelSet& ch,
                const SystemParams& p) {
  const int r = p.r, rr = p.r_R;
  if (s.a0.rows() != r || s.a0.cols() != r || s.w.rows() != r ||
      s.w.cols() != r || s.f.rows() != rr || s.f.cols() != rr ||
      s.b_s.rows() != r || s.b_s.cols() != r || ch.h_rs.rows() != rr ||
      ch.h_rs.cols() != r || ch.h_dr.rows() != r || ch.h_dr.cols() != rr)
    throw Error(ErrorCode::DimensionMismatch, "state/channel shape mismatch");
}

double logdet_hermitian_pd(const CMat& m) {
  Eigen::LLT<CMat> llt(m);
  if (llt.info() != Eigen::Success) {
    // Fall back to eigenvalues for nearly singular input.
    RVec ev = hermitian_eigenvalues(m);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) <= 0.0)
        throw Error(ErrorCode::SingularMse, "log det of non-PD matrix");
      acc += std::log(ev(i));
    }
    return acc;
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    acc += std::log(llt.matrixL()(i, i).real());
  return 2.0 * acc;
}

}  // namespace

CMat mse_matrix(const IterState& s, const ChannelSet& ch,
                const SystemParams& p) {
  check_dims(s, ch, p);
  const double rho = p.rho;
  const CMat g = ch.h_dr * s.f * ch.h_rs;          // effective S->D path
  const CMat gb = g * s.b_s;
  const CMat wh_gb = s.w.adjoint() * gb;
  const CMat hf = ch.h_dr * s.f;
  CMat e = (1.0 - rho) * wh_gb * wh_gb.adjoint() +
           p.sigma_n2 * (s.w.adjoint() * hf) * (s.w.adjoint() * hf).adjoint() +
           p.sigma_n2 * s.w.adjoint() * s.w -
           std::sqrt(1.0 - rho) * (wh_gb.adjoint() + wh_gb) +
           CMat::Identity(p.r, p.r);
  return 0.5 * (e + CMat(e.adjoint()));
}

CMat update_a0(const CMat& mse) {
  Eigen::SelfAdjointEigenSolver<CMat> es(mse);
  if (es.eigenvalues().minCoeff() <= 1e-12)
    throw Error(ErrorCode::SingularMse, "update_a0: MSE matrix singular");
  RVec inv = es.eigenvalues().cwiseInverse();
  CMat a0 = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (a0 + CMat(a0.adjoint()));
}

CMat update_w(const IterState& s, const ChannelSet& ch,
              const SystemParams& p) {
  const double rho = p.rho;
  const CMat gb = ch.h_dr * s.f * ch.h_rs * s.b_s;
  const CMat hf = ch.h_dr * s.f;
  CMat cov = (1.0 - rho) * gb * gb.adjoint() +
             p.sigma_n2 * hf * hf.adjoint() +
             p.sigma_n2 * CMat::Identity(p.r, p.r);
  return cov.ldlt().solve(std::sqrt(1.0 - rho) * gb);
}

double wmse_objective(const IterState& s, const ChannelSet& ch,
                      const SystemParams& p) {
  const CMat e = mse_matrix(s, ch, p);
  return (s.a0 * e).trace().real() - logdet_hermitian_pd(s.a0);
}

double achievable_rate(const IterState& s, const ChannelSet& ch,
                       const SystemParams& p) {
  const CMat gb = ch.h_dr * s.f * ch.h_rs * s.b_s;
  const CMat hf = ch.h_dr * s.f;
  const CMat cov_n = p.sigma_n2 * hf * hf.adjoint() +
                     p.sigma_n2 * CMat::Identity(p.r, p.r);
  const CMat arg = CMat::Identity(p.r, p.r) +
                   (1.0 - p.rho) * gb * gb.adjoint() *
                       cov_n.ldlt().solve(CMat::Identity(p.r, p.r));
  // det argument is similar to a PD matrix; use the Hermitian form
  // I + (1-rho) L^{-1} gb gb^H L^{-H} for numerical safety.
  Eigen::LLT<CMat> llt(cov_n);
  const CMat m = llt.matrixL().solve(gb);
  const CMat herm = CMat::Identity(p.r, p.r) +
                    (1.0 - p.rho) * m * m.adjoint();
  (void)arg;
  const double nats = logdet_hermitian_pd(herm);
  return 0.5 * nats / std::log(2.0);
}

double relay_power_gap(const IterState& s, const ChannelSet& ch,
                       const SystemParams& p) {
  const CMat q_s = s.b_s * s.b_s.adjoint();
  const double rhs =
      harvested_power(ch, s.q_d, q_s, p.rho, p.eh_efficiency);
  const CMat fh_rs_b = s.f * ch.h_rs * s.b_s;
  const double consumed =
      (1.0 - p.rho) * fh_rs_b.squaredNorm() +
      (1.0 - p.rho) *
          (s.f * ch.h_rd * s.q_d.q_d * ch.h_rd.adjoint() * s.f.adjoint())
              .trace()
              .real() +
      p.sigma_n2 * s.f.squaredNorm();
  return rhs - consumed;
}

double source_power_gap(const IterState& s, const SystemParams& p) {
  return p.p_s - s.b_s.squaredNorm();
}

}  // namespace wpr
