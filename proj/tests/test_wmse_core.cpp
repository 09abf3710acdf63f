#include <doctest.h>

#include "test_util.hpp"
#include "wpr/iterative_opt.hpp"
#include "wpr/wmse_core.hpp"

using namespace wpr;
using wprtest::random_complex;
using wprtest::random_psd;

namespace {

SystemParams small_params(int r, int r_R) {
  SystemParams p;
  p.r = r;
  p.r_R = r_R;
  p.sigma_n2 = 1e-2;
  p.rho = 0.4;
  p.d_dr = p.d_rs = 1.0;
  p.p_s = 1.0;
  p.p_d = 1.0;
  return p;
}

// A random state that respects both power constraints, for property tests.
IterState random_feasible_state(const ChannelSet& ch, const SystemParams& p,
                                Rng& rng, bool with_ef) {
  IterState s;
  s.q_d = with_ef ? energy_beamformer_qd(ch.h_rd, p.p_d)
                  : EnergyCovariance{CMat::Zero(p.r, p.r)};
  s.b_s = random_complex(p.r, p.r, rng);
  s.b_s *= std::sqrt(p.p_s) / s.b_s.norm();
  s.w = random_complex(p.r, p.r, rng);
  s.a0 = random_psd(p.r, rng) + 1e-3 * CMat::Identity(p.r, p.r);
  s.f = random_complex(p.r_R, p.r_R, rng);
  // Scale F so the relay power constraint holds with slack.
  const double budget = harvested_power(ch, s.q_d, s.b_s * s.b_s.adjoint(),
                                        p.rho);
  IterState probe = s;
  probe.f = s.f;
  const double gap0 = relay_power_gap(probe, ch, p);
  if (gap0 < 0.1 * budget) {
    const double consumed = budget - gap0;
    s.f *= std::sqrt(0.5 * budget / consumed);
  }
  return s;
}

}  // namespace

TEST_CASE("mse_matrix: W = 0 gives the identity") {
  const SystemParams p = small_params(2, 3);
  Rng rng(1);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s;
  s.q_d = energy_beamformer_qd(ch.h_rd, p.p_d);
  s.a0 = CMat::Identity(2, 2);
  s.w = CMat::Zero(2, 2);
  s.f = random_complex(3, 3, rng);
  s.b_s = random_complex(2, 2, rng);
  CHECK((mse_matrix(s, ch, p) - CMat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("mse_matrix: scalar hand evaluation at rho = 0-limit") {
  SystemParams p = small_params(1, 1);
  p.rho = 1e-12;  // rho = 0 is outside the validated range; approach it
  ChannelSet ch;
  ch.h_rs = CMat::Ones(1, 1);
  ch.h_rd = CMat::Ones(1, 1);
  ch.h_dr = CMat::Ones(1, 1);
  IterState s;
  s.q_d = EnergyCovariance{CMat::Zero(1, 1)};
  s.a0 = CMat::Ones(1, 1);
  s.w = CMat::Ones(1, 1);
  s.f = CMat::Ones(1, 1);
  s.b_s = CMat::Ones(1, 1);
  const double sig = p.sigma_n2;
  // |w|^2 (|hfb|^2 + |hf|^2 s + s) - 2 Re(w hfb) + 1 with unit entries
  const double expect = (1.0 + sig + sig) - 2.0 + 1.0;
  CHECK(mse_matrix(s, ch, p)(0, 0).real() ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("mse_matrix matches a Monte-Carlo covariance of the error vector") {
  const SystemParams p = small_params(2, 2);
  Rng rng(2);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, true);
  const CMat e = mse_matrix(s, ch, p);

  const CMat b_d = psd_sqrt(s.q_d.q_d);
  CMat acc = CMat::Zero(2, 2);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const CVec x_s = wprtest::random_cvec(2, rng);
    const CVec n_r = std::sqrt(p.sigma_n2) * wprtest::random_cvec(2, rng);
    const CVec n_d = std::sqrt(p.sigma_n2) * wprtest::random_cvec(2, rng);
    // Self-interference from the energy flow is cancelled at D, so it does
    // not enter the error vector.
    const CVec y_d = std::sqrt(1.0 - p.rho) * ch.h_dr * s.f *
                         (ch.h_rs * s.b_s * x_s) +
                     ch.h_dr * s.f * n_r + n_d;
    const CVec err = s.w.adjoint() * y_d - x_s;
    acc += err * err.adjoint();
  }
  acc /= draws;
  // Entrywise agreement within Monte-Carlo error.
  const double tol = 3.0 * (1.0 + e.cwiseAbs().maxCoeff()) /
                     std::sqrt(static_cast<double>(draws)) * 3.0;
  CHECK((acc - e).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("update_a0 inverts the MSE matrix") {
  CHECK((update_a0(CMat::Identity(3, 3)) - CMat::Identity(3, 3)).norm() <
        1e-12);
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  CMat expect = CMat::Zero(2, 2);
  expect(0, 0) = 0.5;
  expect(1, 1) = 2.0;
  CHECK((update_a0(d) - expect).norm() < 1e-14);

  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const CMat e = random_psd(3, rng) + 1e-3 * CMat::Identity(3, 3);
    CHECK((update_a0(e) * e - CMat::Identity(3, 3)).norm() < 1e-9);
  }
  CHECK_THROWS_AS(update_a0(CMat::Zero(2, 2)), Error);
}

TEST_CASE("update_w: zero relay matrix gives zero filter") {
  const SystemParams p = small_params(2, 2);
  Rng rng(4);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, false);
  s.f.setZero();
  CHECK(update_w(s, ch, p).norm() < 1e-14);
}

TEST_CASE("update_w: scalar closed form") {
  SystemParams p = small_params(1, 1);
  Rng rng(5);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, false);
  const Cplx h = ch.h_dr(0, 0), f = s.f(0, 0), b =
      (ch.h_rs * s.b_s)(0, 0);
  const Cplx hfb = h * f * b;
  const Cplx hf = h * f;
  const Cplx expect = std::sqrt(1.0 - p.rho) * hfb /
                      ((1.0 - p.rho) * std::norm(hfb) +
                       std::norm(hf) * p.sigma_n2 + p.sigma_n2);
  CHECK(std::abs(update_w(s, ch, p)(0, 0) - expect) < 1e-12);
}

TEST_CASE("update_w minimizes Tr{A0 E} locally") {
  const SystemParams p = small_params(2, 2);
  Rng rng(6);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, true);
  s.w = update_w(s, ch, p);
  const double at_opt = (s.a0 * mse_matrix(s, ch, p)).trace().real();
  for (int k = 0; k < 100; ++k) {
    IterState probe = s;
    probe.w += 1e-3 * random_complex(2, 2, rng);
    const double perturbed =
        (probe.a0 * mse_matrix(probe, ch, p)).trace().real();
    CHECK(at_opt <= perturbed + 1e-12);
  }
}

TEST_CASE("wmse_objective recomposition and trivial values") {
  const SystemParams p = small_params(2, 2);
  Rng rng(7);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, true);
  s.a0 = CMat::Identity(2, 2);
  s.w = CMat::Zero(2, 2);  // E = I
  CHECK(wmse_objective(s, ch, p) == doctest::Approx(2.0).epsilon(1e-12));

  IterState t = random_feasible_state(ch, p, rng, true);
  const CMat e = mse_matrix(t, ch, p);
  const double direct =
      (t.a0 * e).trace().real() -
      std::log(std::abs(Eigen::FullPivLU<CMat>(t.a0).determinant()));
  CHECK(wmse_objective(t, ch, p) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("achievable_rate basics and the log det identity") {
  const SystemParams p = small_params(2, 2);
  Rng rng(8);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s = random_feasible_state(ch, p, rng, true);
  s.b_s.setZero();
  CHECK(achievable_rate(s, ch, p) == 0.0);

  // Scalar sanity: 1/2 log2(1 + SNR).
  SystemParams p1 = small_params(1, 1);
  ChannelSet c1;
  c1.h_rs = CMat::Ones(1, 1);
  c1.h_rd = CMat::Ones(1, 1);
  c1.h_dr = CMat::Ones(1, 1);
  IterState s1;
  s1.q_d = EnergyCovariance{CMat::Zero(1, 1)};
  s1.a0 = s1.w = s1.f = s1.b_s = CMat::Ones(1, 1);
  const double snr = (1.0 - p1.rho) * 1.0 /
                     (p1.sigma_n2 * 1.0 + p1.sigma_n2);
  CHECK(achievable_rate(s1, c1, p1) ==
        doctest::Approx(0.5 * std::log2(1.0 + snr)).epsilon(1e-12));

  // At (A0*, W*): log det(E^{-1}) = 2 x rate in nats.
  for (int k = 0; k < 50; ++k) {
    IterState t = random_feasible_state(ch, p, rng, k % 2 == 0);
    t.w = update_w(t, ch, p);
    const CMat e = mse_matrix(t, ch, p);
    t.a0 = update_a0(e);
    const double logdet_inv =
        -std::log(std::abs(Eigen::FullPivLU<CMat>(e).determinant()));
    const double rate_nats = achievable_rate(t, ch, p) * std::log(2.0);
    CHECK(std::abs(logdet_inv - 2.0 * rate_nats) < 1e-9 * (1.0 + logdet_inv));
  }
}

TEST_CASE("relay_power_gap values") {
  const SystemParams p = small_params(2, 3);
  Rng rng(9);
  const ChannelSet ch = make_channel_set(p, rng);
  IterState s;
  s.q_d = EnergyCovariance{CMat::Zero(2, 2)};
  s.a0 = CMat::Identity(2, 2);
  s.w = CMat::Identity(2, 2);
  s.f = CMat::Zero(3, 3);
  s.b_s = CMat::Zero(2, 2);
  CHECK(relay_power_gap(s, ch, p) == 0.0);

  s.q_d = energy_beamformer_qd(ch.h_rd, p.p_d);
  const double smax2 =
      hermitian_eigenvalues(ch.h_rd.adjoint() * ch.h_rd).maxCoeff();
  CHECK(relay_power_gap(s, ch, p) ==
        doctest::Approx(p.rho * p.p_d * smax2).epsilon(1e-10));
}

TEST_CASE("MSE matrix is PSD and the A0/W updates never increase the "
          "objective") {
  const SystemParams p = small_params(2, 2);
  Rng rng(10);
  const ChannelSet ch = make_channel_set(p, rng);
  for (int k = 0; k < 500; ++k) {
    IterState s = random_feasible_state(ch, p, rng, k % 2 == 0);
    const CMat e = mse_matrix(s, ch, p);
    CHECK(hermitian_eigenvalues(e).minCoeff() > -1e-10);

    const double c0 = wmse_objective(s, ch, p);
    s.a0 = update_a0(e);
    const double c1 = wmse_objective(s, ch, p);
    CHECK(c1 <= c0 + 1e-9);
    s.w = update_w(s, ch, p);
    const double c2 = wmse_objective(s, ch, p);
    CHECK(c2 <= c1 + 1e-9);
  }
}
