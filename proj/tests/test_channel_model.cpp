#include <doctest.h>

#include <cstdio>

#include "test_util.hpp"
#include "wpr/channel_model.hpp"

using namespace wpr;

TEST_CASE("gen_channel: LOS-only limit is the all-ones matrix") {
  Rng rng(1);
  const double d = 2.0;
  const CMat h = gen_channel(3, 2, d, 1e12, rng);
  const double amp = std::pow(d, -1.5);
  CHECK((h - amp * CMat::Ones(3, 2)).cwiseAbs().maxCoeff() < 1e-5 * amp);
}

TEST_CASE("gen_channel: unit per-entry power at K = 0, d = 1") {
  Rng rng(2);
  const int draws = 100000;
  double acc = 0.0;
  for (int k = 0; k < draws; ++k) acc += std::norm(complex_gaussian(rng));
  CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.02));

  acc = 0.0;
  for (int k = 0; k < draws / 4; ++k) {
    const CMat h = gen_channel(2, 2, 1.0, 0.0, rng);
    acc += h.squaredNorm() / 4.0;
  }
  CHECK(acc / (draws / 4) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gen_channel: d^{-3} power scaling") {
  Rng rng(3);
  const int draws = 100000;
  double acc = 0.0;
  for (int k = 0; k < draws; ++k) {
    const CMat h = gen_channel(1, 1, 10.0, 0.0, rng);
    acc += std::norm(h(0, 0));
  }
  CHECK(acc / draws == doctest::Approx(1e-3).epsilon(0.02));

  // Doubling the distance scales mean power by 2^{-3}.
  Rng rng_a(4), rng_b(4);
  double p1 = 0.0, p2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    p1 += std::norm(gen_channel(1, 1, 1.0, 0.0, rng_a)(0, 0));
    p2 += std::norm(gen_channel(1, 1, 2.0, 0.0, rng_b)(0, 0));
  }
  CHECK(p2 / p1 == doctest::Approx(std::pow(2.0, -3.0)).epsilon(0.03));

  CHECK_THROWS_AS(gen_channel(1, 1, 0.0, 0.0, rng), Error);
}

TEST_CASE("make_channel_set: reciprocity and independence") {
  SystemParams p;
  p.r = 2;
  p.r_R = 3;
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const ChannelSet ch = make_channel_set(p, rng);
    CHECK((ch.h_dr - ch.h_rd.transpose()).norm() == 0.0);
  }

  SystemParams ps = p;
  ps.r = ps.r_R = 1;
  const ChannelSet ch = make_channel_set(ps, rng);
  CHECK(std::abs(ch.h_dr(0, 0)) == doctest::Approx(std::abs(ch.h_rd(0, 0))));

  // Cross-correlation of H_RS and H_RD entries vanishes.
  const int draws = 10000;
  Cplx cross(0, 0);
  SystemParams pu = p;
  pu.d_dr = pu.d_rs = 1.0;
  for (int k = 0; k < draws; ++k) {
    const ChannelSet c = make_channel_set(pu, rng);
    cross += c.h_rs(0, 0) * std::conj(c.h_rd(0, 0));
  }
  // |sum of N products of independent unit-power entries| ~ sqrt(N).
  CHECK(std::abs(cross) < 3.0 * std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("energy beamformer: rank-1, full budget, top singular value") {
  CMat h = CMat::Zero(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = 1.0;
  const EnergyCovariance qd = energy_beamformer_qd(h, 1.0);
  CMat e11 = CMat::Zero(2, 2);
  e11(0, 0) = 1.0;
  CHECK((qd.q_d - e11).norm() < 1e-12);
  CHECK((h * qd.q_d * h.adjoint()).trace().real() == doctest::Approx(4.0));

  CHECK(energy_beamformer_qd(h, 0.0).q_d.isZero(0));
  CHECK_THROWS_AS(energy_beamformer_qd(CMat::Zero(2, 2), 1.0), Error);

  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const CMat hr = wprtest::random_complex(4, 4, rng);
    const double pd = 0.7;
    const EnergyCovariance q = energy_beamformer_qd(hr, pd);
    CHECK(q.q_d.trace().real() == doctest::Approx(pd).epsilon(1e-12));
    const RVec ev = hermitian_eigenvalues(q.q_d);
    CHECK(ev(ev.size() - 2) < 1e-12);  // rank 1
    // Harvested term equals P_D times the top eigenvalue of H^H H.
    const double smax2 = hermitian_eigenvalues(hr.adjoint() * hr).maxCoeff();
    CHECK((hr * q.q_d * hr.adjoint()).trace().real() ==
          doctest::Approx(pd * smax2).epsilon(1e-10));
  }
}

TEST_CASE("energy beamformer is the global maximizer over unit-trace PSD") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const CMat h = wprtest::random_complex(3, 3, rng);
    const EnergyCovariance q = energy_beamformer_qd(h, 1.0);
    const double best = (h * q.q_d * h.adjoint()).trace().real();
    for (int probe = 0; probe < 1000; ++probe) {
      CMat cand = wprtest::random_psd(3, rng);
      cand /= cand.trace().real();
      CHECK((h * cand * h.adjoint()).trace().real() <= best + 1e-10);
    }
  }
}

TEST_CASE("harvested_power") {
  ChannelSet ch;
  ch.h_rs = CMat::Ones(1, 1);
  ch.h_rd = CMat::Ones(1, 1);
  ch.h_dr = CMat::Ones(1, 1);
  EnergyCovariance qd{CMat::Ones(1, 1)};
  const CMat qs = CMat::Ones(1, 1);
  CHECK(harvested_power(ch, qd, qs, 0.5) == doctest::Approx(1.0));
  CHECK(harvested_power(ch, EnergyCovariance{CMat::Zero(1, 1)},
                        CMat::Zero(1, 1), 0.5) == 0.0);

  Rng rng(8);
  SystemParams p4;
  p4.d_dr = p4.d_rs = 1.0;
  const ChannelSet c4 = make_channel_set(p4, rng);
  const EnergyCovariance q4 = energy_beamformer_qd(c4.h_rd, p4.p_d);
  const CMat qs4 = wprtest::random_psd(4, rng);
  const double smax2 =
      hermitian_eigenvalues(c4.h_rd.adjoint() * c4.h_rd).maxCoeff();
  const double expect =
      p4.rho * (p4.p_d * smax2 +
                (c4.h_rs * qs4 * c4.h_rs.adjoint()).trace().real());
  CHECK(harvested_power(c4, q4, qs4, p4.rho) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("channel replay file round-trips exactly") {
  SystemParams p;
  Rng rng(9);
  const ChannelSet ch = make_channel_set(p, rng);
  const std::string path = "channels_test.txt";
  save_channel_set(ch, path);
  const ChannelSet back = load_channel_set(path);
  CHECK((back.h_rs - ch.h_rs).norm() == 0.0);
  CHECK((back.h_rd - ch.h_rd).norm() == 0.0);
  CHECK((back.h_dr - ch.h_dr).norm() == 0.0);
  std::remove(path.c_str());
}
