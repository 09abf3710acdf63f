#include "wpr/sdp_core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <limits>

namespace wpr {

void SdpProblem::validate() const {
  const Eigen::Index n = cost.rows();
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  if (!is_hermitian(cost, 1e-10 * scale))
    throw Error(ErrorCode::NotHermitian, "sdp: cost not Hermitian");
  for (const auto& [a, b] : ineq) {
    (void)b;
    if (a.rows() != n || !is_hermitian(a, 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff())))
      throw Error(ErrorCode::NotHermitian, "sdp: inequality matrix invalid");
  }
  for (const auto& [e, v] : eq) {
    (void)v;
    if (e.rows() != n || !is_hermitian(e, 1e-10 * std::max(1.0, e.cwiseAbs().maxCoeff())))
      throw Error(ErrorCode::NotHermitian, "sdp: equality matrix invalid");
  }
}

namespace {

// Iterate of the embedded problem: one symmetric main block plus one scalar
// slack per inequality.
struct Point {
  RMat main;
  RVec slack;
};

double inner(const Point& a, const Point& b) {
  return (a.main.array() * b.main.array()).sum() + a.slack.dot(b.slack);
}

// Largest step t such that main + t*d_main and slack + t*d_slack stay PSD.
double max_step(const Point& p, const Point& d) {
  double step = std::numeric_limits<double>::infinity();
  // L^{-1} D L^{-T} eigenvalues give the boundary along the direction.
  Eigen::LLT<RMat> llt(p.main);
  RMat t = llt.matrixL().solve(d.main);
  t = llt.matrixL().solve(RMat(t.transpose()));
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (t + RMat(t.transpose())),
                                         Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < 0) step = std::min(step, -1.0 / lmin);
  for (Eigen::Index i = 0; i < p.slack.size(); ++i)
    if (d.slack(i) < 0) step = std::min(step, -p.slack(i) / d.slack(i));
  return step;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opts) {
  prob.validate();
  const Eigen::Index n = prob.dimension();
  const Eigen::Index ne = 2 * n;  // embedded main block size
  const int p = static_cast<int>(prob.ineq.size());
  const int q = static_cast<int>(prob.eq.size());
  const int m = p + q;
  const double ntot = static_cast<double>(ne + p);

  // Embedded data. Constraint k (k < p inequalities, then equalities).
  const RMat cost_e = herm_to_real(prob.cost, 1e-8);
  std::vector<RMat> con_e(m);
  RVec rhs(m);
  for (int i = 0; i < p; ++i) {
    con_e[i] = herm_to_real(prob.ineq[i].first, 1e-8);
    rhs(i) = 2.0 * prob.ineq[i].second;
  }
  for (int j = 0; j < q; ++j) {
    con_e[p + j] = herm_to_real(prob.eq[j].first, 1e-8);
    rhs(p + j) = 2.0 * prob.eq[j].second;
  }

  const auto op_a = [&](const Point& y) {
    RVec out(m);
    for (int k = 0; k < m; ++k)
      out(k) = (con_e[k].array() * y.main.array()).sum();
    for (int i = 0; i < p; ++i) out(i) += y.slack(i);
    return out;
  };
  const auto op_at = [&](const RVec& y) {
    Point out{RMat::Zero(ne, ne), RVec::Zero(p)};
    for (int k = 0; k < m; ++k) out.main += y(k) * con_e[k];
    for (int i = 0; i < p; ++i) out.slack(i) = y(i);
    return out;
  };

  // Start: scaled identity obeying the equality trace when there is a
  // single equality; unit identity otherwise. Slacks begin well interior.
  double alpha = 1.0;
  if (q == 1) {
    const double tr = con_e[p].trace();
    if (std::abs(tr) > 1e-12 && rhs(p) / tr > 1e-12) alpha = rhs(p) / tr;
  }
  const double data_scale =
      std::max(1.0, cost_e.cwiseAbs().maxCoeff());
  Point y_pt{alpha * RMat::Identity(ne, ne), RVec::Zero(p)};
  for (int i = 0; i < p; ++i) {
    const double margin =
        rhs(i) - (con_e[i].array() * y_pt.main.array()).sum();
    y_pt.slack(i) = std::max(margin, std::max(1.0, std::abs(rhs(i))));
  }
  Point z_pt{data_scale * RMat::Identity(ne, ne),
             RVec::Constant(p, data_scale)};
  RVec y = RVec::Zero(m);

  SdpSolution sol;
  sol.ineq_duals.assign(p, 0.0);
  sol.eq_duals.assign(q, 0.0);

  const auto finish = [&](SdpStatus status, int iters) {
    sol.status = status;
    sol.iterations = iters;
    sol.x = real_to_herm(y_pt.main);
    for (int i = 0; i < p; ++i) sol.ineq_duals[i] = -y(i);
    for (int j = 0; j < q; ++j) sol.eq_duals[j] = -y(p + j);
    sol.primal_objective =
        0.5 * (cost_e.array() * y_pt.main.array()).sum();
    sol.dual_objective = 0.5 * rhs.dot(y);
    return sol;
  };

  // Merit for the infeasible-start method: complementarity plus both
  // residual norms. With equal primal/dual steps the residuals shrink by
  // exactly (1 - alpha), so the Newton direction is a descent direction.
  const auto merit_of = [&](const Point& yp, const Point& zp,
                            const RVec& yv) {
    const RVec rp = rhs - op_a(yp);
    Point at = op_at(yv);
    const double dres =
        std::sqrt((cost_e - at.main - zp.main).squaredNorm() +
                  (at.slack + zp.slack).squaredNorm());
    return inner(yp, zp) / ntot + rp.norm() + dres;
  };

  double mu = (inner(y_pt, z_pt)) / ntot;
  int stall = 0;
  double best_mu = mu;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    sol.mu_trace.push_back(mu);

    // Residuals.
    const RVec r_p = rhs - op_a(y_pt);
    Point at_y = op_at(y);
    Point r_d{cost_e - at_y.main - z_pt.main,
              RVec(-at_y.slack - z_pt.slack)};

    const double pobj = 0.5 * (cost_e.array() * y_pt.main.array()).sum();
    const double dobj = 0.5 * rhs.dot(y);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    const double pfeas = r_p.cwiseAbs().maxCoeff() /
                         (1.0 + rhs.cwiseAbs().maxCoeff());
    const double dfeas =
        std::sqrt(r_d.main.squaredNorm() + r_d.slack.squaredNorm()) /
        (1.0 + cost_e.norm());
    if (pfeas <= opts.tol_feas && dfeas <= opts.tol_feas &&
        (rel_gap <= opts.tol_gap || mu / (1.0 + std::abs(pobj)) <= opts.tol_gap))
      return finish(SdpStatus::Optimal, iter);

    // Divergence of the dual objective with stubborn primal infeasibility
    // is the practical certificate of an infeasible primal.
    if (std::abs(dobj) > 1e11 * data_scale && pfeas > 1e-6)
      return finish(SdpStatus::Infeasible, iter);

    Eigen::LLT<RMat> z_llt(z_pt.main);
    if (z_llt.info() != Eigen::Success) {
      z_pt.main += 1e-12 * data_scale * RMat::Identity(ne, ne);
      z_llt.compute(z_pt.main);
      if (z_llt.info() != Eigen::Success)
        return finish(SdpStatus::MaxIter, iter);
    }
    const auto zinv_apply = [&](const RMat& v) { return z_llt.solve(v); };

    // Schur complement M_kl = <A_k, Z^{-1} A_l Y> (+ slack terms).
    RMat big_m(m, m);
    std::vector<RMat> zinv_al_y(m);
    for (int l = 0; l < m; ++l)
      zinv_al_y[l] = zinv_apply(RMat(con_e[l] * y_pt.main));
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        big_m(k, l) = (con_e[k].array() * zinv_al_y[l].array()).sum();
    for (int i = 0; i < p; ++i)
      big_m(i, i) += y_pt.slack(i) / z_pt.slack(i);
    Eigen::PartialPivLU<RMat> m_lu(big_m);

    const RMat zinv_rd_y = zinv_apply(RMat(r_d.main * y_pt.main));
    RVec a_zinv_rd_y(m);
    for (int k = 0; k < m; ++k)
      a_zinv_rd_y(k) =
          (con_e[k].array() * zinv_rd_y.array()).sum();
    for (int i = 0; i < p; ++i)
      a_zinv_rd_y(i) += r_d.slack(i) * y_pt.slack(i) / z_pt.slack(i);

    const RMat zinv_main = zinv_apply(RMat::Identity(ne, ne));
    RVec a_zinv(m);
    for (int k = 0; k < m; ++k)
      a_zinv(k) = (con_e[k].array() * zinv_main.array()).sum();
    for (int i = 0; i < p; ++i) a_zinv(i) += 1.0 / z_pt.slack(i);

    // One Newton direction for a given centering target and second-order
    // correction term.
    const auto direction = [&](double sigma_mu, const Point* corr) {
      RVec rhs_vec = rhs - sigma_mu * a_zinv + a_zinv_rd_y;
      if (corr != nullptr) {
        const RMat zc = zinv_apply(corr->main);
        for (int k = 0; k < m; ++k)
          rhs_vec(k) += (con_e[k].array() * zc.array()).sum();
        for (int i = 0; i < p; ++i)
          rhs_vec(i) += corr->slack(i) / z_pt.slack(i);
      }
      const RVec dy = m_lu.solve(rhs_vec);
      Point at_dy = op_at(dy);
      Point dz{r_d.main - at_dy.main, RVec(r_d.slack - at_dy.slack)};
      Point dy_pt{RMat(), RVec(p)};
      RMat dmain = sigma_mu * zinv_main - y_pt.main -
                   zinv_apply(RMat(dz.main * y_pt.main));
      if (corr != nullptr) dmain -= zinv_apply(corr->main);
      dy_pt.main = 0.5 * (dmain + RMat(dmain.transpose()));
      for (int i = 0; i < p; ++i) {
        double v = (sigma_mu - (corr ? corr->slack(i) : 0.0)) / z_pt.slack(i) -
                   y_pt.slack(i) -
                   dz.slack(i) * y_pt.slack(i) / z_pt.slack(i);
        dy_pt.slack(i) = v;
      }
      return std::tuple<Point, RVec, Point>{dy_pt, dy, dz};
    };

    // Predictor.
    auto [dy_aff, dyv_aff, dz_aff] = direction(0.0, nullptr);
    const double ap_aff =
        std::min(1.0, opts.step_fraction * max_step(y_pt, dy_aff));
    const double ad_aff =
        std::min(1.0, opts.step_fraction * max_step(z_pt, dz_aff));
    Point y_try{y_pt.main + ap_aff * dy_aff.main,
                y_pt.slack + ap_aff * dy_aff.slack};
    Point z_try{z_pt.main + ad_aff * dz_aff.main,
                z_pt.slack + ad_aff * dz_aff.slack};
    const double mu_aff = inner(y_try, z_try) / ntot;
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::min(std::max(sigma, 1e-6), 0.9);

    // Corrector with the second-order term dZ_aff dY_aff.
    Point corr{RMat(dz_aff.main * dy_aff.main),
               RVec(dz_aff.slack.cwiseProduct(dy_aff.slack))};
    auto [dy_pt, dyv, dz_pt] = direction(sigma * mu, &corr);

    const double ap = std::min(1.0, opts.step_fraction * max_step(y_pt, dy_pt));
    const double ad = std::min(1.0, opts.step_fraction * max_step(z_pt, dz_pt));
    const double merit0 = merit_of(y_pt, z_pt, y);
    sol.mu_trace.back() = merit0;

    const auto candidate = [&](double a_p, double a_d) {
      Point yn{y_pt.main + a_p * dy_pt.main, y_pt.slack + a_p * dy_pt.slack};
      Point zn{z_pt.main + a_d * dz_pt.main, z_pt.slack + a_d * dz_pt.slack};
      return std::tuple<Point, Point, RVec>{std::move(yn), std::move(zn),
                                            RVec(y + a_d * dyv)};
    };

    bool accepted = false;
    {
      auto [yn, zn, yv] = candidate(ap, ad);
      if (merit_of(yn, zn, yv) <= merit0 * (1.0 + 1e-12)) {
        y_pt = std::move(yn);
        z_pt = std::move(zn);
        y = std::move(yv);
        accepted = true;
      }
    }
    if (!accepted) {
      // Equal-step fallback with backtracking on the merit.
      double a = std::min(ap, ad);
      for (int back = 0; back < 40; ++back) {
        auto [yn, zn, yv] = candidate(a, a);
        if (merit_of(yn, zn, yv) <= merit0 * (1.0 + 1e-12) || back == 39) {
          y_pt = std::move(yn);
          z_pt = std::move(zn);
          y = std::move(yv);
          break;
        }
        a *= 0.5;
      }
    }
    mu = inner(y_pt, z_pt) / ntot;

    if (mu < best_mu * 0.999) {
      best_mu = mu;
      stall = 0;
    } else if (++stall > 30) {
      return finish(SdpStatus::MaxIter, iter + 1);
    }
  }
  return finish(SdpStatus::MaxIter, opts.max_iter);
}

double KktReport::worst() const {
  double w = primal_ineq;
  w = std::max(w, primal_eq);
  w = std::max(w, primal_psd);
  w = std::max(w, dual_psd);
  w = std::max(w, dual_sign);
  w = std::max(w, compl_ineq);
  w = std::max(w, duality_gap);
  return w;
}

KktReport kkt_residuals(const SdpProblem& p, const SdpSolution& s) {
  KktReport rep;
  CMat z = p.cost;
  double dual = 0.0;
  for (size_t i = 0; i < p.ineq.size(); ++i) {
    const double lam = s.ineq_duals[i];
    const double val = (p.ineq[i].first * s.x).trace().real();
    rep.primal_ineq = std::max(rep.primal_ineq, val - p.ineq[i].second);
    rep.dual_sign = std::max(rep.dual_sign, -lam);
    rep.compl_ineq =
        std::max(rep.compl_ineq, std::abs(lam * (val - p.ineq[i].second)));
    z += lam * p.ineq[i].first;
    dual -= lam * p.ineq[i].second;
  }
  for (size_t j = 0; j < p.eq.size(); ++j) {
    const double nu = s.eq_duals[j];
    const double val = (p.eq[j].first * s.x).trace().real();
    rep.primal_eq = std::max(rep.primal_eq, std::abs(val - p.eq[j].second));
    z += nu * p.eq[j].first;
    dual -= nu * p.eq[j].second;
  }
  rep.primal_ineq = std::max(rep.primal_ineq, 0.0);
  rep.primal_psd = std::max(0.0, -hermitian_eigenvalues(s.x).minCoeff());
  rep.dual_psd = std::max(0.0, -hermitian_eigenvalues(z).minCoeff());
  rep.compl_xz = (s.x * z).norm();
  rep.duality_gap =
      std::abs((p.cost * s.x).trace().real() - dual);
  return rep;
}

void dump_problem(const SdpProblem& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os.precision(17);
  const auto put = [&](const CMat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        os << m(i, j).real() << ' ' << m(i, j).imag() << '\n';
  };
  os << p.dimension() << ' ' << p.ineq.size() << ' ' << p.eq.size() << '\n';
  put(p.cost);
  for (const auto& [a, b] : p.ineq) {
    os << b << '\n';
    put(a);
  }
  for (const auto& [e, v] : p.eq) {
    os << v << '\n';
    put(e);
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

SdpProblem parse_problem(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  Eigen::Index n = 0;
  size_t ni = 0, nq = 0;
  if (!(is >> n >> ni >> nq))
    throw Error(ErrorCode::IoError, "sdp dump: bad header");
  const auto get = [&](CMat& m) {
    m.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        double re = 0, im = 0;
        if (!(is >> re >> im))
          throw Error(ErrorCode::IoError, "sdp dump: truncated");
        m(i, j) = Cplx(re, im);
      }
  };
  SdpProblem p;
  get(p.cost);
  for (size_t i = 0; i < ni; ++i) {
    double b = 0;
    is >> b;
    CMat a;
    get(a);
    p.ineq.emplace_back(std::move(a), b);
  }
  for (size_t j = 0; j < nq; ++j) {
    double v = 0;
    is >> v;
    CMat e;
    get(e);
    p.eq.emplace_back(std::move(e), v);
  }
  return p;
}

}  // namespace wpr
