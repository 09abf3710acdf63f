#include "wpr/channel_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace wpr {

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Cplx complex_gaussian(Rng& rng) {
  // Box-Muller; each real part has variance 1/2.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  const double mag = std::sqrt(-std::log(u1));  // sqrt(2)*N(0,1/2) radius
  const double ang = 2.0 * M_PI * u2;
  return Cplx(mag * std::cos(ang), mag * std::sin(ang));
}

void SystemParams::validate() const {
  if (r < 1 || r_R < r)
    throw Error(ErrorCode::DimensionMismatch, "params: need r_R >= r >= 1");
  if (p_s < 0 || p_d < 0)
    throw Error(ErrorCode::InfeasibleBudget, "params: negative power budget");
  if (sigma_n2 <= 0)
    throw Error(ErrorCode::DimensionMismatch, "params: sigma_n2 must be > 0");
  if (rho <= 0 || rho >= 1)
    throw Error(ErrorCode::DimensionMismatch, "params: rho must be in (0,1)");
  if (d_dr <= 0 || d_rs <= 0)
    throw Error(ErrorCode::InvalidDistance, "params: distances must be > 0");
  if (rician_k < 0)
    throw Error(ErrorCode::DimensionMismatch, "params: K must be >= 0");
}

CMat gen_channel(int rows, int cols, double distance, double rician_k,
                 Rng& rng) {
  if (distance <= 0)
    throw Error(ErrorCode::InvalidDistance, "gen_channel: distance <= 0");
  const double amp = std::pow(distance, -1.5);
  const double los = std::sqrt(rician_k / (1.0 + rician_k));
  const double nlos = std::sqrt(1.0 / (1.0 + rician_k));
  CMat h(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      h(i, j) = amp * (los + nlos * complex_gaussian(rng));
  return h;
}

ChannelSet make_channel_set(const SystemParams& params, Rng& rng) {
  params.validate();
  ChannelSet ch;
  ch.h_rs = gen_channel(params.r_R, params.r, params.d_rs, params.rician_k, rng);
  ch.h_rd = gen_channel(params.r_R, params.r, params.d_dr, params.rician_k, rng);
  ch.h_dr = ch.h_rd.transpose();
  return ch;
}

EnergyCovariance energy_beamformer_qd(const CMat& h_rd, double p_d) {
  if (h_rd.norm() == 0.0)
    throw Error(ErrorCode::ZeroChannel, "energy_beamformer_qd: zero channel");
  if (p_d == 0.0) return EnergyCovariance{CMat::Zero(h_rd.cols(), h_rd.cols())};
  const SvdResult dec = svd(h_rd);
  const CVec v_max = dec.v.col(0);
  return EnergyCovariance{p_d * v_max * v_max.adjoint()};
}

double harvested_power(const ChannelSet& ch, const EnergyCovariance& qd,
                       const CMat& q_s, double rho, double eh_efficiency) {
  const double ef = (ch.h_rd * qd.q_d * ch.h_rd.adjoint()).trace().real();
  const double info = (ch.h_rs * q_s * ch.h_rs.adjoint()).trace().real();
  return eh_efficiency * rho * (ef + info);
}

namespace {

void write_matrix(std::ostream& os, const CMat& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os.precision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      os << m(i, j).real() << ' ' << m(i, j).imag() << '\n';
}

CMat read_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols))
    throw Error(ErrorCode::IoError, "channel file: bad header");
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      double re = 0, im = 0;
      if (!(is >> re >> im))
        throw Error(ErrorCode::IoError, "channel file: truncated");
      m(i, j) = Cplx(re, im);
    }
  return m;
}

}  // namespace

void save_channel_set(const ChannelSet& ch, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_matrix(os, ch.h_rs);
  write_matrix(os, ch.h_rd);
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

ChannelSet load_channel_set(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  ChannelSet ch;
  ch.h_rs = read_matrix(is);
  ch.h_rd = read_matrix(is);
  ch.h_dr = ch.h_rd.transpose();
  return ch;
}

}  // namespace wpr
