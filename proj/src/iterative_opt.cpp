#include "wpr/iterative_opt.hpp"

#include <cmath>
#include <fstream>

namespace wpr {

namespace {

CVec concat_state(const IterState& s) {
  CVec out(s.a0.size() + s.w.size() + s.f.size() + s.b_s.size());
  out << vec(s.a0), vec(s.w), vec(s.f), vec(s.b_s);
  return out;
}

}  // namespace

IterState initialize_state(const ChannelSet& ch, const SystemParams& p,
                           JointScheme scheme) {
  p.validate();
  IterState s;
  s.q_d = (scheme == JointScheme::EfaOpt)
              ? energy_beamformer_qd(ch.h_rd, p.p_d)
              : EnergyCovariance{CMat::Zero(p.r, p.r)};
  s.b_s = std::sqrt(p.p_s / p.r) * CMat::Identity(p.r, p.r);

  // Identity-shaped relay start spending half of the harvested budget, so
  // the power constraint begins strictly slack.
  const CMat hb = ch.h_rs * s.b_s;
  const double ef_term =
      (ch.h_rd * s.q_d.q_d * ch.h_rd.adjoint()).trace().real();
  const double budget =
      p.eh_efficiency * p.rho * (ef_term + hb.squaredNorm());
  const double spend = (1.0 - p.rho) * (hb.squaredNorm() + ef_term) +
                       p.sigma_n2 * p.r_R;
  const double scale = budget > 0.0 ? std::sqrt(0.5 * budget / spend) : 0.0;
  s.f = scale * CMat::Identity(p.r_R, p.r_R);

  s.a0 = CMat::Identity(p.r, p.r);
  s.w = update_w(s, ch, p);
  s.a0 = update_a0(mse_matrix(s, ch, p));
  return s;
}

std::pair<IterState, IterTrace> run_joint_opt(const ChannelSet& ch,
                                              const SystemParams& p,
                                              const IterConfig& cfg) {
  IterState s = initialize_state(ch, p, cfg.scheme);
  IterTrace trace;
  trace.c_initial = wmse_objective(s, ch, p);
  const bool source_pinned = p.p_s <= 0.0;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    IterRecord rec;
    const CVec x_prev = concat_state(s);

    s.a0 = update_a0(mse_matrix(s, ch, p));
    rec.c_after_a0 = wmse_objective(s, ch, p);

    s.w = update_w(s, ch, p);
    rec.c_after_w = wmse_objective(s, ch, p);

    {
      const RelayQcqp q = build_f_qcqp(s, ch, p);
      const RelaySolution fs = solve_f_closed(q);
      // The previous F stays feasible for the new subproblem; never accept
      // a numerically worse iterate.
      if (q.objective(fs.f) <= q.objective(vec(s.f)))
        s.f = unvec(fs.f, p.r_R, p.r_R);
    }
    rec.c_after_f = wmse_objective(s, ch, p);

    if (!source_pinned) {
      const SourceQcqp q = build_b_qcqp(s, ch, p);
      if (!source_qcqp_feasible(q)) {
        if (iter == 0)
          throw Error(ErrorCode::DropFailed,
                      "source subproblem infeasible at the initial state");
        trace.flagged = true;
      } else {
        const HomogenizedSdp h = homogenize(q);
        SdpProblem sdp;
        sdp.cost = h.b1;
        sdp.ineq = {{h.b2, h.c_b}, {h.b3, h.p_s}};
        sdp.eq = {{h.b4, 1.0}};
        const SdpSolution sol = solve_sdp(sdp);
        bool accepted = false;
        if (sol.status != SdpStatus::Infeasible) {
          try {
            const Rank1Certificate cert = recover_rank1(sol.x, h);
            const CMat b_new = extract_b(cert, p.r);
            const CVec b = vec(b_new);
            const double feas_tol =
                1e-7 * (1.0 + std::abs(q.c_b) + q.p_s);
            const bool feasible =
                q.relay_constraint(b) <= q.c_b + feas_tol &&
                b.squaredNorm() <= q.p_s + feas_tol;
            if (feasible && q.objective(b) <= q.objective(vec(s.b_s))) {
              s.b_s = b_new;
              accepted = true;
            }
          } catch (const Error&) {
            accepted = false;
          }
        }
        if (!accepted && iter == 0 && sol.status == SdpStatus::Infeasible)
          throw Error(ErrorCode::DropFailed,
                      "source SDP infeasible at the initial state");
        // A rejected update keeps the previous (feasible) precoder.
      }
    } else {
      s.b_s.setZero();
    }
    rec.c_after_b = wmse_objective(s, ch, p);

    rec.rate_bits = achievable_rate(s, ch, p);
    rec.relay_gap = relay_power_gap(s, ch, p);
    rec.source_gap = source_power_gap(s, p);
    const CVec x_new = concat_state(s);
    const double denom = std::max(x_new.norm(), 1e-300);
    rec.minimizer_change = (x_new - x_prev).norm() / denom;
    trace.records.push_back(rec);

    if (cfg.stopping == StoppingRule::ObjectiveDiff) {
      if (std::abs(rec.c_after_b - rec.c_after_f) < cfg.epsilon_obj) {
        trace.converged = true;
        break;
      }
    } else {
      if (rec.minimizer_change < cfg.epsilon_minimizer) {
        trace.converged = true;
        break;
      }
    }
  }
  return {s, trace};
}

void write_trace_csv(const IterTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os.precision(12);
  os << "iteration,c_after_a0,c_after_w,c_after_f,c_after_b,rate_bits,"
        "relay_gap,source_gap,minimizer_change\n";
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const IterRecord& r = trace.records[i];
    os << i + 1 << ',' << r.c_after_a0 << ',' << r.c_after_w << ','
       << r.c_after_f << ',' << r.c_after_b << ',' << r.rate_bits << ','
       << r.relay_gap << ',' << r.source_gap << ',' << r.minimizer_change
       << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace wpr
