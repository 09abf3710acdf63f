#include "wpr/diag_schemes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wpr {

namespace {

// Reverse columns so singular values come out ascending.
void ascending_svd(const CMat& m, CMat& u, RVec& s, CMat& v) {
  const SvdResult dec = svd(m);
  const Eigen::Index n = dec.singular_values.size();
  u.resize(m.rows(), n);
  v.resize(m.cols(), n);
  s.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    u.col(k) = dec.u.col(n - 1 - k);
    v.col(k) = dec.v.col(n - 1 - k);
    s(k) = dec.singular_values(n - 1 - k);
  }
}

struct WaterFill {
  RVec lambda_f;
  double nu = 0.0;
  double residual = 0.0;
};

// lambda_f(nu) from the per-mode closed form, nu from bisection on the
// budget equality sum(lambda_f * z) = rhs.
WaterFill water_fill_core(const RVec& z, const RVec& a, double rhs) {
  const Eigen::Index r = z.size();
  WaterFill out;
  out.lambda_f = RVec::Zero(r);
  if (rhs <= 0.0) return out;

  const auto gains = [&](double nu) {
    RVec lf(r);
    for (Eigen::Index m = 0; m < r; ++m) {
      const double am = a(m);
      lf(m) = -0.5 / am +
              0.5 * std::sqrt(1.0 / (am * am) + 4.0 / (nu * am * z(m)));
    }
    return lf;
  };
  const auto spent = [&](double nu) { return gains(nu).dot(z); };

  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (spent(hi) > rhs && guard++ < 4000) hi *= 2.0;
  guard = 0;
  while (spent(lo) < rhs && guard++ < 4000) lo *= 0.5;
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    nu = 0.5 * (lo + hi);
    const double val = spent(nu);
    if (std::abs(val - rhs) <= 1e-13 * rhs) break;
    if (val > rhs)
      lo = nu;
    else
      hi = nu;
    if (hi - lo <= 1e-16 * hi) break;
  }
  out.nu = nu;
  out.lambda_f = gains(nu);
  out.residual = std::abs(out.lambda_f.dot(z) - rhs);
  return out;
}

}  // namespace

DiagDecomposition hpm_plm_decompose(const ChannelSet& ch,
                                    const SystemParams& p) {
  if (p.r != p.r_R)
    throw Error(ErrorCode::DimensionMismatch,
                "hpm_plm_decompose: requires r == r_R");
  DiagDecomposition d;
  RVec sigma;
  ascending_svd(ch.h_dr, d.u_dr, sigma, d.v_dr);
  if (sigma(0) < 1e-10 * sigma(sigma.size() - 1))
    throw Error(ErrorCode::RankDeficient, "H_DR numerically rank deficient");
  d.lambda_dr = sigma.cwiseProduct(sigma);
  d.lambda_dr_max = d.lambda_dr(d.lambda_dr.size() - 1);
  d.u_rs_tilde = d.v_dr.conjugate();

  const CMat eff = d.u_rs_tilde.adjoint() * ch.h_rs;
  const SvdResult es = svd(eff);
  if (es.singular_values(es.singular_values.size() - 1) <
      1e-10 * es.singular_values(0))
    throw Error(ErrorCode::RankDeficient, "H_RS numerically rank deficient");
  d.h_e = eff.inverse();
  d.col_weight.resize(p.r);
  for (int m = 0; m < p.r; ++m) d.col_weight(m) = d.h_e.col(m).squaredNorm();
  return d;
}

double diag_objective(const RVec& lambda_f, const RVec& lambda_rs,
                      const RVec& lambda_dr, const SystemParams& p) {
  double c = 0.0;
  for (Eigen::Index m = 0; m < lambda_f.size(); ++m) {
    const double term = (1.0 - p.rho) * lambda_rs(m) * lambda_f(m) *
                        lambda_dr(m) /
                        (p.sigma_n2 * (1.0 + lambda_f(m) * lambda_dr(m)));
    if (term <= 0.0) return std::numeric_limits<double>::infinity();
    c -= std::log(term);
  }
  return c;
}

double diag_rate_bits(const RVec& lambda_f, const RVec& lambda_rs,
                      const RVec& lambda_dr, const SystemParams& p) {
  double nats = 0.0;
  for (Eigen::Index m = 0; m < lambda_f.size(); ++m) {
    const double snr = (1.0 - p.rho) * lambda_rs(m) * lambda_f(m) *
                       lambda_dr(m) /
                       (p.sigma_n2 * (1.0 + lambda_f(m) * lambda_dr(m)));
    nats += std::log1p(snr);
  }
  return 0.5 * nats / std::log(2.0);
}

PowerAllocation relay_water_fill(const PowerAllocation& alloc,
                                 const DiagDecomposition& decomp,
                                 const SystemParams& p) {
  PowerAllocation out = alloc;
  const Eigen::Index r = alloc.lambda_rs.size();
  RVec z(r);
  for (Eigen::Index m = 0; m < r; ++m)
    z(m) = (1.0 - p.rho) * alloc.lambda_rs(m) + p.sigma_n2 + alloc.beta(m);
  const double rhs = p.eh_efficiency * p.rho *
                     (alloc.lambda_rs.sum() + p.p_d * decomp.lambda_dr_max);
  const WaterFill wf = water_fill_core(z, decomp.lambda_dr, rhs);
  out.lambda_f = wf.lambda_f;
  out.nu = wf.nu;
  return out;
}

PairingResult best_pairing_bruteforce(const RVec& lambda_dr, const RVec& l,
                                      double c, const SystemParams& p) {
  const int r = static_cast<int>(l.size());
  if (r > 5)
    throw Error(ErrorCode::TooLarge, "best_pairing_bruteforce: r > 5");
  // lambda_rs implied by the base gains; the budget right-hand side is
  // invariant under the pairing.
  RVec lambda_rs(r);
  for (int m = 0; m < r; ++m)
    lambda_rs(m) = (l(m) - p.sigma_n2) / (1.0 - p.rho);
  const double rhs =
      p.rho * (lambda_rs.sum() + c / (1.0 - p.rho));

  PairingResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (int leak = 0; leak < r; ++leak) {
      RVec z(r), lrs(r);
      for (int m = 0; m < r; ++m) {
        z(m) = l(perm[m]) + (perm[m] == leak ? c : 0.0);
        lrs(m) = lambda_rs(perm[m]);
      }
      const WaterFill wf = water_fill_core(z, lambda_dr, rhs);
      const double obj = -diag_objective(wf.lambda_f, lrs, lambda_dr, p);
      if (obj > best.objective) {
        best.objective = obj;
        best.perm = perm;
        best.leak_index = leak;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

// Infeasible-start primal-dual interior point for
//   min -sum log x  s.t.  G x <= h,  s^T x = d.
// Small and deterministic; used by the full source power optimization.
RVec solve_log_barrier(const RMat& g_mat, const RVec& h, const RVec& s,
                       double d, const RVec& x0, double* out_mu,
                       double* out_gamma2) {
  const Eigen::Index n = x0.size();
  const Eigen::Index mi = g_mat.rows();
  RVec x = x0;
  RVec lam = RVec::Ones(mi);
  double nu = 0.0;
  const double scale = 1.0 + std::abs(d) + h.cwiseAbs().maxCoeff();

  const auto residuals = [&](const RVec& xx, const RVec& ll, double nn,
                             double t) {
    RVec gx = g_mat * xx - h;
    RVec r_dual = -xx.cwiseInverse() + g_mat.transpose() * ll + nn * s;
    RVec r_cent = -ll.cwiseProduct(gx) - RVec::Constant(mi, 1.0 / t);
    const double r_pri = s.dot(xx) - d;
    RVec r(n + mi + 1);
    r << r_dual, r_cent, r_pri;
    return r;
  };

  for (int iter = 0; iter < 300; ++iter) {
    const RVec gx = g_mat * x - h;
    const double eta = -gx.dot(lam);  // surrogate gap
    const double t = 10.0 * static_cast<double>(mi) / std::max(eta, 1e-300);
    const RVec r = residuals(x, lam, nu, t);
    const double r_pri = std::abs(s.dot(x) - d);
    const double r_dual_norm = r.head(n).norm();
    if (r_pri <= 1e-11 * scale && r_dual_norm <= 1e-9 &&
        eta <= 1e-11 * scale)
      break;

    // Block elimination of the centrality rows.
    RMat hpd = RMat::Zero(n, n);
    hpd.diagonal() = x.cwiseInverse().cwiseAbs2();
    for (Eigen::Index i = 0; i < mi; ++i)
      hpd += (lam(i) / (-gx(i))) * g_mat.row(i).transpose() * g_mat.row(i);
    RVec rhs_x = x.cwiseInverse() - g_mat.transpose() * lam - nu * s;
    for (Eigen::Index i = 0; i < mi; ++i)
      rhs_x += g_mat.row(i).transpose() *
               ((1.0 / t) / gx(i) + lam(i));
    // rhs_x = -r_dual - G^T D^{-1} r_cent with D = diag(gx).
    RMat kkt = RMat::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = hpd;
    kkt.topRightCorner(n, 1) = s;
    kkt.bottomLeftCorner(1, n) = s.transpose();
    RVec kkt_rhs(n + 1);
    kkt_rhs << rhs_x, -(s.dot(x) - d);
    const RVec sol = kkt.fullPivLu().solve(kkt_rhs);
    const RVec dx = sol.head(n);
    const double dnu = sol(n);
    RVec dlam(mi);
    for (Eigen::Index i = 0; i < mi; ++i)
      dlam(i) = -(lam(i) * g_mat.row(i).dot(dx) + lam(i) * gx(i) + 1.0 / t) /
                gx(i);

    double alpha = 1.0;
    for (Eigen::Index i = 0; i < mi; ++i)
      if (dlam(i) < 0) alpha = std::min(alpha, -lam(i) / dlam(i));
    alpha *= 0.99;
    const double r_norm = r.norm();
    for (int back = 0; back < 60; ++back) {
      const RVec xn = x + alpha * dx;
      if ((xn.array() > 0).all() &&
          ((g_mat * xn - h).array() < 0).all()) {
        const RVec rn = residuals(xn, lam + alpha * dlam, nu + alpha * dnu, t);
        if (rn.norm() <= (1.0 - 0.01 * alpha) * r_norm || back == 59) {
          x = xn;
          lam += alpha * dlam;
          nu += alpha * dnu;
          break;
        }
      }
      alpha *= 0.5;
      if (back == 59)
        throw Error(ErrorCode::Infeasible,
                    "source_power_full: line search failed");
    }
  }

  const RVec gx = g_mat * x - h;
  if (std::abs(s.dot(x) - d) > 1e-8 * scale || gx.maxCoeff() > 1e-8 * scale)
    throw Error(ErrorCode::Infeasible,
                "source_power_full: equality unreachable under the budget");
  if (out_mu != nullptr) *out_mu = nu;
  if (out_gamma2 != nullptr) *out_gamma2 = lam(mi - 1);
  return x;
}

}  // namespace

PowerAllocation source_power_full(const PowerAllocation& alloc,
                                  const DiagDecomposition& decomp,
                                  const SystemParams& p) {
  const Eigen::Index r = alloc.lambda_f.size();
  RVec s(r);
  for (Eigen::Index m = 0; m < r; ++m)
    s(m) = (1.0 - p.rho) * alloc.lambda_f(m) - p.rho;
  const double d = p.eh_efficiency * p.rho * p.p_d * decomp.lambda_dr_max -
                   alloc.lambda_f.dot(RVec(RVec::Constant(r, p.sigma_n2) +
                                           alloc.beta));

  // Rows: ordering chain then the weighted budget.
  RMat g_mat = RMat::Zero(r, r);
  RVec h = RVec::Zero(r);
  for (Eigen::Index m = 0; m + 1 < r; ++m) {
    g_mat(m, m) = 1.0;
    g_mat(m, m + 1) = -1.0;
  }
  g_mat.row(r - 1) = decomp.col_weight.transpose();
  h(r - 1) = p.p_s;

  RVec x0(r);
  const double base = p.p_s / (2.0 * decomp.col_weight.sum());
  for (Eigen::Index m = 0; m < r; ++m)
    x0(m) = base * (1.0 + 0.1 * static_cast<double>(m + 1) /
                              static_cast<double>(r));

  PowerAllocation out = alloc;
  out.lambda_rs = solve_log_barrier(g_mat, h, s, d, x0, &out.mu, &out.gamma2);
  return out;
}

PowerAllocation source_power_simplified(const PowerAllocation& alloc,
                                        const DiagDecomposition& decomp,
                                        const SystemParams& p) {
  const Eigen::Index r = alloc.lambda_f.size();
  RVec s(r);
  for (Eigen::Index m = 0; m < r; ++m)
    s(m) = (1.0 - p.rho) * alloc.lambda_f(m) - p.rho;
  const double d = p.eh_efficiency * p.rho * p.p_d * decomp.lambda_dr_max -
                   alloc.lambda_f.dot(RVec(RVec::Constant(r, p.sigma_n2) +
                                           alloc.beta));
  const double cap = p.p_s / decomp.col_weight.maxCoeff();

  PowerAllocation out = alloc;
  const bool all_pos = (s.array() > 0).all();
  const bool all_neg = (s.array() < 0).all();
  if ((all_pos && d > 0) || (all_neg && d < 0)) {
    // Budget-slack branch: mu from the equality alone.
    const double mu = static_cast<double>(r) / d;
    RVec lrs(r);
    for (Eigen::Index m = 0; m < r; ++m) lrs(m) = 1.0 / (mu * s(m));
    if (lrs.sum() <= cap + 1e-12 * (1.0 + cap)) {
      out.lambda_rs = lrs;
      out.mu = mu;
      out.gamma2 = 0.0;
      return out;
    }
  }

  // Active budget (or mixed signs): damped Newton on the 2x2 system in
  // (gamma2, mu).
  double gamma2 = 1.0, mu = 1.0;
  const auto denom_ok = [&](double g2, double m2) {
    for (Eigen::Index m = 0; m < r; ++m)
      if (g2 + m2 * s(m) <= 0) return false;
    return true;
  };
  if (!denom_ok(gamma2, mu)) {
    // Push the start into the domain along gamma2.
    gamma2 = 1.0 + 1.01 * (mu * s.cwiseAbs().maxCoeff());
  }
  const auto eval = [&](double g2, double m2) {
    double f1 = -cap, f2 = -d;
    for (Eigen::Index m = 0; m < r; ++m) {
      const double den = g2 + m2 * s(m);
      f1 += 1.0 / den;
      f2 += s(m) / den;
    }
    return std::pair<double, double>{f1, f2};
  };

  auto [f1, f2] = eval(gamma2, mu);
  double fnorm = std::hypot(f1, f2);
  const double tol = 1e-12 * (1.0 + cap + std::abs(d));
  bool ok = false;
  for (int it = 0; it < 100; ++it) {
    if (fnorm <= tol) {
      ok = true;
      break;
    }
    double j11 = 0, j12 = 0, j22 = 0;
    for (Eigen::Index m = 0; m < r; ++m) {
      const double den = gamma2 + mu * s(m);
      const double den2 = den * den;
      j11 -= 1.0 / den2;
      j12 -= s(m) / den2;
      j22 -= s(m) * s(m) / den2;
    }
    const double det = j11 * j22 - j12 * j12;
    if (std::abs(det) < 1e-300)
      throw Error(ErrorCode::NewtonDiverged,
                  "source_power_simplified: singular Jacobian");
    const double dg = (-f1 * j22 + f2 * j12) / det;
    const double dm = (-f2 * j11 + f1 * j12) / det;
    double step = 1.0;
    bool moved = false;
    for (int back = 0; back < 60; ++back) {
      const double g2n = gamma2 + step * dg;
      const double mn = mu + step * dm;
      if (denom_ok(g2n, mn)) {
        auto [f1n, f2n] = eval(g2n, mn);
        const double fn = std::hypot(f1n, f2n);
        if (fn < fnorm) {
          gamma2 = g2n;
          mu = mn;
          f1 = f1n;
          f2 = f2n;
          fnorm = fn;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved)
      throw Error(ErrorCode::NewtonDiverged,
                  "source_power_simplified: damped Newton stalled");
  }
  if (!ok && fnorm > 1e-7 * (1.0 + cap + std::abs(d)))
    throw Error(ErrorCode::NewtonDiverged,
                "source_power_simplified: no convergence in 100 iterations");
  RVec lrs(r);
  for (Eigen::Index m = 0; m < r; ++m) lrs(m) = 1.0 / (gamma2 + mu * s(m));
  if ((lrs.array() <= 0).any())
    throw Error(ErrorCode::NewtonDiverged,
                "source_power_simplified: nonpositive output");
  out.lambda_rs = lrs;
  out.mu = mu;
  out.gamma2 = gamma2;
  return out;
}

namespace {

DiagResult finish_diag(const PowerAllocation& alloc,
                       const DiagDecomposition& decomp, const ChannelSet& ch,
                       const SystemParams& p) {
  DiagResult res;
  res.alloc = alloc;
  res.f = decomp.v_dr *
          RVec(alloc.lambda_f.cwiseSqrt()).asDiagonal().toDenseMatrix().cast<Cplx>() *
          decomp.u_rs_tilde.adjoint();
  res.b_s = decomp.h_e *
            RVec(alloc.lambda_rs.cwiseSqrt()).asDiagonal().toDenseMatrix().cast<Cplx>();
  IterState st;
  st.a0 = CMat::Identity(p.r, p.r);
  st.w = CMat::Identity(p.r, p.r);
  st.f = res.f;
  st.b_s = res.b_s;
  st.q_d = energy_beamformer_qd(ch.h_rd, p.p_d);
  res.rate_bits = achievable_rate(st, ch, p);
  return res;
}

}  // namespace

DiagResult run_efa_s(const ChannelSet& ch, const SystemParams& p,
                     EfaVariant variant, double tol, int max_iters) {
  p.validate();
  const DiagDecomposition decomp = hpm_plm_decompose(ch, p);
  const int r = p.r;

  DiagResult res;
  if (p.p_s <= 0.0) {
    res.alloc.lambda_f = RVec::Zero(r);
    res.alloc.lambda_rs = RVec::Zero(r);
    res.alloc.beta = RVec::Zero(r);
    res.f = CMat::Zero(r, r);
    res.b_s = CMat::Zero(r, r);
    res.rate_bits = 0.0;
    return res;
  }

  PowerAllocation alloc;
  alloc.beta = RVec::Zero(r);
  alloc.beta(r - 1) = (1.0 - p.rho) * p.p_d * decomp.lambda_dr_max;
  alloc.lambda_rs = RVec::Constant(r, p.p_s / decomp.col_weight.sum());
  alloc.lambda_f = RVec::Zero(r);

  res.converged = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    alloc = relay_water_fill(alloc, decomp, p);
    const double c_before =
        diag_objective(alloc.lambda_f, alloc.lambda_rs, decomp.lambda_dr, p);
    alloc = (variant == EfaVariant::S1)
                ? source_power_full(alloc, decomp, p)
                : source_power_simplified(alloc, decomp, p);
    const double c_after =
        diag_objective(alloc.lambda_f, alloc.lambda_rs, decomp.lambda_dr, p);
    res.c_trace.push_back(c_after);
    res.iterations = iter + 1;
    if (std::abs(c_after - c_before) < tol) {
      res.converged = true;
      break;
    }
  }

  DiagResult out = finish_diag(alloc, decomp, ch, p);
  out.c_trace = std::move(res.c_trace);
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

DiagResult run_nefa_s(const ChannelSet& ch, const SystemParams& p) {
  p.validate();
  if (p.r != p.r_R)
    throw Error(ErrorCode::DimensionMismatch, "run_nefa_s: requires r == r_R");
  const int r = p.r;

  CMat u_dr, v_dr, u_rs, v_rs;
  RVec sig_dr, sig_rs;
  ascending_svd(ch.h_dr, u_dr, sig_dr, v_dr);
  ascending_svd(ch.h_rs, u_rs, sig_rs, v_rs);
  const RVec lambda_dr = sig_dr.cwiseProduct(sig_dr);

  DiagResult res;
  res.alloc.beta = RVec::Zero(r);
  res.alloc.lambda_rs =
      (p.p_s / r) * sig_rs.cwiseProduct(sig_rs);  // ascending with sig_rs
  if (p.p_s <= 0.0) {
    res.alloc.lambda_f = RVec::Zero(r);
    res.f = CMat::Zero(r, r);
    res.b_s = CMat::Zero(r, r);
    return res;
  }

  RVec z(r);
  for (int m = 0; m < r; ++m)
    z(m) = (1.0 - p.rho) * res.alloc.lambda_rs(m) + p.sigma_n2;
  const double rhs = p.eh_efficiency * p.rho * res.alloc.lambda_rs.sum();
  const WaterFill wf = water_fill_core(z, lambda_dr, rhs);
  res.alloc.lambda_f = wf.lambda_f;
  res.alloc.nu = wf.nu;

  res.f = v_dr *
          RVec(wf.lambda_f.cwiseSqrt()).asDiagonal().toDenseMatrix().cast<Cplx>() *
          u_rs.adjoint();
  res.b_s = std::sqrt(p.p_s / r) * CMat::Identity(r, r);
  IterState st;
  st.a0 = CMat::Identity(r, r);
  st.w = CMat::Identity(r, r);
  st.f = res.f;
  st.b_s = res.b_s;
  st.q_d = EnergyCovariance{CMat::Zero(r, r)};
  res.rate_bits = achievable_rate(st, ch, p);
  res.iterations = 1;
  return res;
}

double forwarded_signal_power(const PowerAllocation& alloc,
                              const DiagDecomposition& decomp,
                              const SystemParams& p, const CMat& q_d) {
  const Eigen::Index r = alloc.lambda_f.size();
  const RVec sigma = decomp.lambda_dr.cwiseSqrt();
  const CMat ef = sigma.asDiagonal().toDenseMatrix().cast<Cplx>() *
                  decomp.u_dr.transpose() * q_d * decomp.u_dr.conjugate() *
                  sigma.asDiagonal().toDenseMatrix().cast<Cplx>();
  double total = 0.0;
  for (Eigen::Index m = 0; m < r; ++m) {
    const double lf_ldr = alloc.lambda_f(m) * decomp.lambda_dr(m);
    total += (1.0 - p.rho) * lf_ldr *
             (alloc.lambda_rs(m) + ef(m, m).real());
    total += (lf_ldr + 1.0) * p.sigma_n2;
  }
  return total;
}

}  // namespace wpr
