#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "wpr/matrix_kit.hpp"

namespace wpr {

// One shared engine type so every draw is reproducible from a seed.
using Rng = std::mt19937_64;

// Uniform double in [0,1) from the top 53 bits of the engine output.
// std::*_distribution is implementation-defined, so we roll our own to keep
// streams identical across standard libraries.
double uniform01(Rng& rng);
// Standard complex circularly-symmetric Gaussian, E|z|^2 = 1 (Box-Muller).
Cplx complex_gaussian(Rng& rng);

struct SystemParams {
  int r = 4;               // antennas at S and D
  int r_R = 4;             // antennas at the relay
  double p_s = 0.1;        // source power budget [W]
  double p_d = 0.5;        // destination power budget [W]
  double sigma_n2 = 1e-6;  // noise power [W]
  double rho = 0.5;        // power-splitting ratio, in (0,1)
  double d_dr = 5.0;       // D-to-R distance [m]
  double d_rs = 5.0;       // R-to-S distance [m]
  double rician_k = 0.0;   // Rician factor
  double eh_efficiency = 1.0;  // RF-to-DC conversion efficiency

  void validate() const;
};

// The three link matrices. Reciprocity ties h_dr to h_rd exactly.
struct ChannelSet {
  CMat h_rs;  // S -> R, r_R x r
  CMat h_rd;  // D -> R, r_R x r
  CMat h_dr;  // R -> D, r x r_R; equals h_rd transposed
};

struct EnergyCovariance {
  CMat q_d;  // r x r Hermitian PSD, Tr <= P_D; zero for NEFA schemes
};

// Rician flat-fading draw with d^{-3/2} amplitude path loss. The LOS part is
// the all-ones matrix (broadside arrays), the scattered part has i.i.d.
// unit-variance entries.
CMat gen_channel(int rows, int cols, double distance, double rician_k,
                 Rng& rng);

ChannelSet make_channel_set(const SystemParams& params, Rng& rng);

// Rank-1 energy beamformer at D: power on the top right singular vector of
// H_{R,D}, so the harvested term is P_D times the largest squared singular
// value.
EnergyCovariance energy_beamformer_qd(const CMat& h_rd, double p_d);

double harvested_power(const ChannelSet& ch, const EnergyCovariance& qd,
                       const CMat& q_s, double rho, double eh_efficiency = 1.0);

// Plain-text replay format: complex entries as "re im" pairs, column order.
void save_channel_set(const ChannelSet& ch, const std::string& path);
ChannelSet load_channel_set(const std::string& path);

}  // namespace wpr
