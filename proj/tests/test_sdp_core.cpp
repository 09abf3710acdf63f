#include <doctest.h>

#include <cstdio>

#include "test_util.hpp"
#include "wpr/sdp_core.hpp"
#include "wpr/source_step.hpp"

using namespace wpr;
using wprtest::random_complex;
using wprtest::random_cvec;
using wprtest::random_hermitian;
using wprtest::random_psd;

namespace {

// Random instance of the homogenized source-step shape (dimension r^2+1)
// built around a strictly feasible interior point.
SdpProblem random_eq16_instance(int r, Rng& rng, double* margin_out = nullptr) {
  const int n = r * r;
  SourceQcqp q;
  q.a3_mat = random_psd(n, rng);
  q.a2_vec = random_cvec(n, rng);
  q.a4_mat = random_hermitian(n, rng);
  const CVec b0 = 0.5 * random_cvec(n, rng);
  const double margin = 0.25 + wpr::uniform01(rng);
  q.p_s = b0.squaredNorm() + margin;
  q.c_b = (b0.dot(q.a4_mat * b0)).real() + margin;
  if (margin_out != nullptr) *margin_out = margin;
  const HomogenizedSdp h = homogenize(q);
  SdpProblem p;
  p.cost = h.b1;
  p.ineq = {{h.b2, h.c_b}, {h.b3, h.p_s}};
  p.eq = {{h.b4, 1.0}};
  return p;
}

// Independent lower bound: for fixed inequality multipliers the equality
// multiplier maximizing the dual is a generalized Schur complement, so a
// refined 2-D grid over the inequality duals certifies the optimum.
double dual_grid_bound(const SdpProblem& p) {
  const Eigen::Index n = p.cost.rows();
  const CMat& b2 = p.ineq[0].first;
  const CMat& b3 = p.ineq[1].first;
  const double c_b = p.ineq[0].second;
  const double p_s = p.ineq[1].second;

  const auto dual_value = [&](double l1, double l2) {
    const CMat m = p.cost + l1 * b2 + l2 * b3;
    const CMat a = m.topLeftCorner(n - 1, n - 1);
    const CVec v = m.topRightCorner(n - 1, 1);
    const double gamma = m(n - 1, n - 1).real();
    Eigen::SelfAdjointEigenSolver<CMat> es(a);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-11 * std::max(lmax, 1.0))
      return -std::numeric_limits<double>::infinity();
    // Range check and pseudo-inverse quadratic form.
    CVec proj = es.eigenvectors().adjoint() * v;
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      const double ev = es.eigenvalues()(i);
      if (ev > 1e-11 * std::max(lmax, 1.0))
        quad += std::norm(proj(i)) / ev;
      else if (std::abs(proj(i)) > 1e-9 * (1.0 + v.norm()))
        return -std::numeric_limits<double>::infinity();
    }
    const double nu_min = quad - gamma;
    return -l1 * c_b - l2 * p_s - nu_min;
  };

  double lo1 = 0.0, hi1 = 50.0 * (1.0 + p.cost.norm());
  double lo2 = 0.0, hi2 = hi1;
  double best = -std::numeric_limits<double>::infinity();
  double b1 = 0.0, b2v = 0.0;
  for (int level = 0; level < 8; ++level) {
    const int steps = 40;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double l1 = lo1 + (hi1 - lo1) * i / steps;
        const double l2 = lo2 + (hi2 - lo2) * j / steps;
        const double val = dual_value(l1, l2);
        if (val > best) {
          best = val;
          b1 = l1;
          b2v = l2;
        }
      }
    const double w1 = (hi1 - lo1) / steps * 2.5;
    const double w2 = (hi2 - lo2) / steps * 2.5;
    lo1 = std::max(0.0, b1 - w1);
    hi1 = b1 + w1;
    lo2 = std::max(0.0, b2v - w2);
    hi2 = b2v + w2;
  }
  return best;
}

}  // namespace

TEST_CASE("solve_sdp: one-dimensional and selector examples") {
  SUBCASE("min 3x s.t. x = 1") {
    SdpProblem p;
    p.cost = 3.0 * CMat::Identity(1, 1);
    p.eq = {{CMat::Identity(1, 1), 1.0}};
    const SdpSolution s = solve_sdp(p);
    CHECK(s.status == SdpStatus::Optimal);
    CHECK(s.x(0, 0).real() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.primal_objective == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(s.dual_objective == doctest::Approx(3.0).epsilon(1e-8));
    const KktReport rep = kkt_residuals(p, s);
    CHECK(rep.worst() < 1e-7);
  }

  SUBCASE("smallest-eigenvalue selector") {
    SdpProblem p;
    CMat c = CMat::Zero(2, 2);
    c(0, 0) = 1.0;
    c(1, 1) = 2.0;
    p.cost = c;
    p.eq = {{CMat::Identity(2, 2), 1.0}};
    const SdpSolution s = solve_sdp(p);
    CHECK(s.status == SdpStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(s.x(0, 0).real() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(s.x(1, 1)) < 1e-6);
  }
}

TEST_CASE("kkt_residuals: exact solution vs perturbed solution") {
  SdpProblem p;
  CMat c = CMat::Zero(2, 2);
  c(0, 0) = 1.0;
  c(1, 1) = 2.0;
  p.cost = c;
  p.eq = {{CMat::Identity(2, 2), 1.0}};

  SdpSolution exact;
  exact.x = CMat::Zero(2, 2);
  exact.x(0, 0) = 1.0;
  exact.eq_duals = {-1.0};  // Z = cost - I >= 0
  exact.ineq_duals = {};
  const KktReport rep = kkt_residuals(p, exact);
  CHECK(rep.worst() < 1e-12);
  CHECK(rep.compl_xz < 1e-12);

  SdpSolution bumped = exact;
  bumped.x(1, 1) += 1e-3;
  const KktReport rep2 = kkt_residuals(p, bumped);
  CHECK(rep2.compl_xz >= 1e-4);
}

TEST_CASE("solve_sdp: random source-shape instances, duality gap and KKT") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3) / 2;  // dim 5 or 10
    const SdpProblem p = random_eq16_instance(r, rng);
    const SdpSolution s = solve_sdp(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    CHECK(std::abs(s.primal_objective - s.dual_objective) <=
          1e-7 * (1.0 + std::abs(s.primal_objective)));
    const KktReport rep = kkt_residuals(p, s);
    const double scale = 1.0 + std::abs(s.primal_objective);
    CHECK(rep.primal_ineq <= 1e-7 * scale);
    CHECK(rep.primal_eq <= 1e-7 * scale);
    CHECK(rep.primal_psd <= 1e-8 * scale);
    CHECK(rep.dual_psd <= 1e-8 * scale);
    CHECK(rep.dual_sign <= 1e-9);
    CHECK(rep.duality_gap <= 1e-7 * scale);
  }
}

TEST_CASE("solve_sdp matches the dual-certificate grid oracle at dim 5") {
  Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    const SdpProblem p = random_eq16_instance(2, rng);
    const SdpSolution s = solve_sdp(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    const double bound = dual_grid_bound(p);
    CHECK(s.primal_objective >=
          bound - 1e-4 * (1.0 + std::abs(s.primal_objective)));
    CHECK(s.primal_objective <=
          bound + 1e-4 * (1.0 + std::abs(s.primal_objective)));
  }
}

TEST_CASE("solve_sdp: barrier parameter non-increasing") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const SdpProblem p = random_eq16_instance(2, rng);
    const SdpSolution s = solve_sdp(p);
    for (size_t k = 1; k < s.mu_trace.size(); ++k)
      CHECK(s.mu_trace[k] <=
            s.mu_trace[k - 1] * (1.0 + 1e-9) + 1e-300);
  }
}

TEST_CASE("solve_sdp: infeasible instance is not reported optimal") {
  SdpProblem p;
  p.cost = CMat::Identity(2, 2);
  p.ineq = {{CMat::Identity(2, 2), -1.0}};  // Tr X <= -1 impossible
  CMat sel = CMat::Zero(2, 2);
  sel(1, 1) = 1.0;
  p.eq = {{sel, 1.0}};
  const SdpSolution s = solve_sdp(p);
  CHECK(s.status != SdpStatus::Optimal);
}

TEST_CASE("solve_sdp is deterministic") {
  Rng rng(24);
  const SdpProblem p = random_eq16_instance(2, rng);
  const SdpSolution a = solve_sdp(p);
  const SdpSolution b = solve_sdp(p);
  CHECK((a.x - b.x).norm() == 0.0);
  CHECK(a.primal_objective == b.primal_objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("problem dump round-trips through the parser") {
  Rng rng(25);
  const SdpProblem p = random_eq16_instance(2, rng);
  const std::string path = "sdp_dump_test.txt";
  dump_problem(p, path);
  const SdpProblem back = parse_problem(path);
  CHECK((back.cost - p.cost).norm() == 0.0);
  REQUIRE(back.ineq.size() == p.ineq.size());
  for (size_t i = 0; i < p.ineq.size(); ++i) {
    CHECK((back.ineq[i].first - p.ineq[i].first).norm() == 0.0);
    CHECK(back.ineq[i].second == p.ineq[i].second);
  }
  REQUIRE(back.eq.size() == 1);
  CHECK(back.eq[0].second == 1.0);
  std::remove(path.c_str());
}
