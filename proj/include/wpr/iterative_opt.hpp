#pragma once

#include <string>
#include <vector>

#include "wpr/relay_step.hpp"
#include "wpr/source_step.hpp"

namespace wpr {

enum class JointScheme { EfaOpt, NefaOpt };
enum class StoppingRule { ObjectiveDiff, MinimizerDiff };

struct IterConfig {
  JointScheme scheme = JointScheme::EfaOpt;
  double epsilon_obj = 1e-4;        // natural-log objective units
  double epsilon_minimizer = 1e-4;  // relative minimizer change
  int max_iters = 500;
  StoppingRule stopping = StoppingRule::ObjectiveDiff;
};

// Objective after each sub-update in one outer iteration, plus diagnostics.
struct IterRecord {
  double c_after_a0 = 0.0;
  double c_after_w = 0.0;
  double c_after_f = 0.0;
  double c_after_b = 0.0;
  double rate_bits = 0.0;
  double relay_gap = 0.0;
  double source_gap = 0.0;
  double minimizer_change = 0.0;
};

struct IterTrace {
  double c_initial = 0.0;
  std::vector<IterRecord> records;
  bool converged = false;
  bool flagged = false;  // an infeasible source step kept the previous B_S
  int iterations() const { return static_cast<int>(records.size()); }
};

// Deterministic feasible start: uniform source power, identity-shaped relay
// matrix using half of the harvested budget, then the closed-form W and A0.
IterState initialize_state(const ChannelSet& ch, const SystemParams& params,
                           JointScheme scheme);

std::pair<IterState, IterTrace> run_joint_opt(const ChannelSet& ch,
                                              const SystemParams& params,
                                              const IterConfig& cfg);

void write_trace_csv(const IterTrace& trace, const std::string& path);

}  // namespace wpr
