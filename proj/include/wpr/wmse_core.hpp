#pragma once

#include "wpr/channel_model.hpp"
#include "wpr/matrix_kit.hpp"

namespace wpr {

// The alternating-minimization quadruple plus the fixed energy covariance.
struct IterState {
  CMat a0;   // r x r Hermitian PSD weight
  CMat w;    // r x r receive filter at D
  CMat f;    // r_R x r_R relay processing matrix
  CMat b_s;  // r x r source precoder
  EnergyCovariance q_d;
};

// MSE matrix of the estimate W^H y_D against x_S; Hermitian PSD, r x r.
CMat mse_matrix(const IterState& state, const ChannelSet& ch,
                const SystemParams& params);

// Optimal weight for fixed (W, F, B_S): the inverse of the MSE matrix.
CMat update_a0(const CMat& mse);

// MMSE receive filter for fixed (F, B_S).
CMat update_w(const IterState& state, const ChannelSet& ch,
              const SystemParams& params);

// Tr{A0 E} - log det A0, the surrogate objective (natural log).
double wmse_objective(const IterState& state, const ChannelSet& ch,
                      const SystemParams& params);

// End-to-end half-duplex rate in bits per channel use.
double achievable_rate(const IterState& state, const ChannelSet& ch,
                       const SystemParams& params);

// Harvested minus consumed relay power; feasible iff >= -tolerance.
double relay_power_gap(const IterState& state, const ChannelSet& ch,
                       const SystemParams& params);

double source_power_gap(const IterState& state, const SystemParams& params);

}  // namespace wpr
