#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wpr/diag_schemes.hpp"
#include "wpr/iterative_opt.hpp"

namespace wpr {

enum class Scheme { EfaOpt, NefaOpt, EfaS1, EfaS2, NefaS };

std::string to_string(Scheme s);
std::optional<Scheme> scheme_from_string(const std::string& name);

struct Scenario {
  SystemParams params;  // rho / distances are overwritten by the grids
  std::vector<Scheme> schemes = {Scheme::EfaOpt, Scheme::NefaOpt,
                                 Scheme::EfaS1, Scheme::EfaS2, Scheme::NefaS};
  std::vector<double> rho_grid;       // default 0.02:0.02:0.98
  std::vector<double> dr_ratio_grid;  // d_DR / d_DS values
  double d_ds = 10.0;
  int drops = 200;
  std::uint64_t seed = 1;
  double epsilon = 1e-4;  // stopping tolerance for every scheme
  int max_iters = 500;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

std::vector<double> default_rho_grid();

struct CellStats {
  double mean_rate = 0.0;
  double std_error = 0.0;
  int n_drops = 0;
  int n_flagged = 0;
  double mean_iterations = 0.0;
};

struct ResultTable {
  std::vector<Scheme> schemes;
  std::vector<double> rho_grid;
  std::vector<double> dr_grid;
  // cells[scheme][dr][rho]
  std::vector<std::vector<std::vector<CellStats>>> cells;

  const CellStats& at(size_t scheme, size_t dr, size_t rho) const {
    return cells[scheme][dr][rho];
  }
  // argmax of mean rate over the rho grid, ties toward smaller rho
  double best_rho(size_t scheme, size_t dr) const;
  double best_rho_rate(size_t scheme, size_t dr) const;
  double flagged_fraction() const;
};

// Deterministic per-drop channel stream: one draw per (seed, drop,
// dr_ratio), shared across rho values and schemes.
Rng drop_rng(std::uint64_t seed, int drop, double dr_ratio);

// Rate of one scheme on one channel realization. Throws wpr::Error on
// flagged (infeasible) drops.
struct SchemeRun {
  double rate_bits = 0.0;
  int iterations = 0;
};
SchemeRun run_scheme(Scheme scheme, const ChannelSet& ch,
                     const SystemParams& params, double epsilon,
                     int max_iters);

ResultTable run_scenario(const Scenario& s);

void emit_csv(const ResultTable& t, const std::string& path);

// Single-drop convergence traces (objective per iteration, shared channel).
struct ConvergenceReport {
  std::vector<Scheme> schemes;
  std::vector<std::vector<double>> c_iter;      // per scheme, per iteration
  std::vector<std::vector<double>> rate_bits;   // per scheme, per iteration
  std::vector<int> iterations;
};

ConvergenceReport convergence_report(const ChannelSet& ch,
                                     const SystemParams& params,
                                     const std::vector<Scheme>& schemes,
                                     double epsilon = 1e-4,
                                     int max_iters = 500);

void emit_convergence_csv(const ConvergenceReport& rep,
                          const std::string& path);

// Flat "key = value" configuration text.
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_config(Scenario& s, const std::map<std::string, std::string>& kv);

}  // namespace wpr
