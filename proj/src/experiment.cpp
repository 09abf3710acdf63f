#include "wpr/experiment.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace wpr {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::EfaOpt: return "EFA-OPT";
    case Scheme::NefaOpt: return "NEFA-OPT";
    case Scheme::EfaS1: return "EFA-S1";
    case Scheme::EfaS2: return "EFA-S2";
    case Scheme::NefaS: return "NEFA-S";
  }
  return "?";
}

std::optional<Scheme> scheme_from_string(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(c == '_' ? '-' : std::toupper(c));
  if (up == "EFA-OPT") return Scheme::EfaOpt;
  if (up == "NEFA-OPT") return Scheme::NefaOpt;
  if (up == "EFA-S1") return Scheme::EfaS1;
  if (up == "EFA-S2") return Scheme::EfaS2;
  if (up == "NEFA-S") return Scheme::NefaS;
  return std::nullopt;
}

std::vector<double> default_rho_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 49; ++k) grid.push_back(0.02 * k);
  return grid;
}

void Scenario::validate() const {
  params.validate();
  if (drops < 1)
    throw Error(ErrorCode::DimensionMismatch, "scenario: drops >= 1 required");
  for (double rho : rho_grid)
    if (rho <= 0.0 || rho >= 1.0)
      throw Error(ErrorCode::DimensionMismatch, "scenario: rho outside (0,1)");
  for (double q : dr_ratio_grid)
    if (q <= 0.0 || q >= 1.0)
      throw Error(ErrorCode::DimensionMismatch,
                  "scenario: dr ratio outside (0,1)");
}

double ResultTable::best_rho(size_t scheme, size_t dr) const {
  size_t best = 0;
  for (size_t k = 1; k < rho_grid.size(); ++k)
    if (cells[scheme][dr][k].mean_rate > cells[scheme][dr][best].mean_rate)
      best = k;
  return rho_grid[best];
}

double ResultTable::best_rho_rate(size_t scheme, size_t dr) const {
  double best = cells[scheme][dr][0].mean_rate;
  for (size_t k = 1; k < rho_grid.size(); ++k)
    best = std::max(best, cells[scheme][dr][k].mean_rate);
  return best;
}

double ResultTable::flagged_fraction() const {
  long long total = 0, flagged = 0;
  for (const auto& per_scheme : cells)
    for (const auto& per_dr : per_scheme)
      for (const auto& cell : per_dr) {
        total += cell.n_drops + cell.n_flagged;
        flagged += cell.n_flagged;
      }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / total;
}

Rng drop_rng(std::uint64_t seed, int drop, double dr_ratio) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(dr_ratio);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(drop),
                    static_cast<std::uint32_t>(bits),
                    static_cast<std::uint32_t>(bits >> 32)};
  return Rng(seq);
}

SchemeRun run_scheme(Scheme scheme, const ChannelSet& ch,
                     const SystemParams& params, double epsilon,
                     int max_iters) {
  switch (scheme) {
    case Scheme::EfaOpt:
    case Scheme::NefaOpt: {
      IterConfig cfg;
      cfg.scheme = (scheme == Scheme::EfaOpt) ? JointScheme::EfaOpt
                                              : JointScheme::NefaOpt;
      cfg.epsilon_obj = epsilon;
      cfg.max_iters = max_iters;
      auto [state, trace] = run_joint_opt(ch, params, cfg);
      return SchemeRun{achievable_rate(state, ch, params),
                       trace.iterations()};
    }
    case Scheme::EfaS1:
    case Scheme::EfaS2: {
      const DiagResult res = run_efa_s(
          ch, params,
          scheme == Scheme::EfaS1 ? EfaVariant::S1 : EfaVariant::S2, epsilon,
          max_iters);
      return SchemeRun{res.rate_bits, res.iterations};
    }
    case Scheme::NefaS: {
      const DiagResult res = run_nefa_s(ch, params);
      return SchemeRun{res.rate_bits, res.iterations};
    }
  }
  throw Error(ErrorCode::DimensionMismatch, "unknown scheme");
}

ResultTable run_scenario(const Scenario& s) {
  Scenario sc = s;
  if (sc.rho_grid.empty()) sc.rho_grid = default_rho_grid();
  if (sc.dr_ratio_grid.empty()) sc.dr_ratio_grid = {0.5};
  sc.validate();

  const size_t n_schemes = sc.schemes.size();
  const size_t n_dr = sc.dr_ratio_grid.size();
  const size_t n_rho = sc.rho_grid.size();

  struct DropRecord {
    std::vector<double> rate;     // flattened [scheme][dr][rho]
    std::vector<int> iterations;
    std::vector<char> ok;
  };
  const size_t n_cells = n_schemes * n_dr * n_rho;
  std::vector<DropRecord> per_drop(sc.drops);
  const auto cell = [&](size_t si, size_t di, size_t ri) {
    return (si * n_dr + di) * n_rho + ri;
  };

  const auto worker_body = [&](int drop) {
    DropRecord rec;
    rec.rate.assign(n_cells, 0.0);
    rec.iterations.assign(n_cells, 0);
    rec.ok.assign(n_cells, 0);
    for (size_t di = 0; di < n_dr; ++di) {
      const double ratio = sc.dr_ratio_grid[di];
      SystemParams p = sc.params;
      p.d_dr = ratio * sc.d_ds;
      p.d_rs = (1.0 - ratio) * sc.d_ds;
      Rng rng = drop_rng(sc.seed, drop, ratio);
      const ChannelSet ch = make_channel_set(p, rng);
      for (size_t ri = 0; ri < n_rho; ++ri) {
        p.rho = sc.rho_grid[ri];
        for (size_t si = 0; si < n_schemes; ++si) {
          try {
            const SchemeRun run =
                run_scheme(sc.schemes[si], ch, p, sc.epsilon, sc.max_iters);
            rec.rate[cell(si, di, ri)] = run.rate_bits;
            rec.iterations[cell(si, di, ri)] = run.iterations;
            rec.ok[cell(si, di, ri)] = 1;
          } catch (const Error&) {
            rec.ok[cell(si, di, ri)] = 0;  // flagged drop, excluded
          }
        }
      }
    }
    per_drop[drop] = std::move(rec);
  };

  unsigned n_threads = sc.threads > 0 ? static_cast<unsigned>(sc.threads)
                                      : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, sc.drops));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const int drop = next.fetch_add(1);
        if (drop >= sc.drops) return;
        worker_body(drop);
      }
    });
  for (auto& t : pool) t.join();

  ResultTable table;
  table.schemes = sc.schemes;
  table.rho_grid = sc.rho_grid;
  table.dr_grid = sc.dr_ratio_grid;
  table.cells.assign(
      n_schemes,
      std::vector<std::vector<CellStats>>(n_dr,
                                          std::vector<CellStats>(n_rho)));
  for (size_t si = 0; si < n_schemes; ++si)
    for (size_t di = 0; di < n_dr; ++di)
      for (size_t ri = 0; ri < n_rho; ++ri) {
        CellStats& c = table.cells[si][di][ri];
        double sum = 0.0, sum_sq = 0.0, iters = 0.0;
        int n = 0, flagged = 0;
        for (int drop = 0; drop < sc.drops; ++drop) {
          const auto& rec = per_drop[drop];
          if (!rec.ok[cell(si, di, ri)]) {
            ++flagged;
            continue;
          }
          const double v = rec.rate[cell(si, di, ri)];
          sum += v;
          sum_sq += v * v;
          iters += rec.iterations[cell(si, di, ri)];
          ++n;
        }
        c.n_drops = n;
        c.n_flagged = flagged;
        if (n > 0) {
          c.mean_rate = sum / n;
          c.mean_iterations = iters / n;
          if (n > 1) {
            const double var =
                std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
            c.std_error = std::sqrt(var / n);
          }
        }
      }
  return table;
}

void emit_csv(const ResultTable& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os.precision(9);
  os << "scheme,rho,dr_ratio,mean_rate_bits,stderr,n_drops,n_flagged\n";
  for (size_t si = 0; si < t.schemes.size(); ++si)
    for (size_t ri = 0; ri < t.rho_grid.size(); ++ri)
      for (size_t di = 0; di < t.dr_grid.size(); ++di) {
        const CellStats& c = t.cells[si][di][ri];
        os << to_string(t.schemes[si]) << ',' << t.rho_grid[ri] << ','
           << t.dr_grid[di] << ',' << c.mean_rate << ',' << c.std_error << ','
           << c.n_drops << ',' << c.n_flagged << '\n';
      }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

ConvergenceReport convergence_report(const ChannelSet& ch,
                                     const SystemParams& params,
                                     const std::vector<Scheme>& schemes,
                                     double epsilon, int max_iters) {
  ConvergenceReport rep;
  rep.schemes = schemes;
  for (Scheme s : schemes) {
    std::vector<double> cs, rates;
    switch (s) {
      case Scheme::EfaOpt:
      case Scheme::NefaOpt: {
        IterConfig cfg;
        cfg.scheme = (s == Scheme::EfaOpt) ? JointScheme::EfaOpt
                                           : JointScheme::NefaOpt;
        cfg.epsilon_obj = epsilon;
        cfg.max_iters = max_iters;
        auto [state, trace] = run_joint_opt(ch, params, cfg);
        (void)state;
        for (const IterRecord& r : trace.records) {
          cs.push_back(r.c_after_b);
          rates.push_back(r.rate_bits);
        }
        break;
      }
      case Scheme::EfaS1:
      case Scheme::EfaS2: {
        const DiagResult res = run_efa_s(
            ch, params, s == Scheme::EfaS1 ? EfaVariant::S1 : EfaVariant::S2,
            epsilon, max_iters);
        cs = res.c_trace;
        rates.assign(cs.size(), res.rate_bits);
        break;
      }
      case Scheme::NefaS: {
        const DiagResult res = run_nefa_s(ch, params);
        cs = {0.0};
        rates = {res.rate_bits};
        break;
      }
    }
    rep.iterations.push_back(static_cast<int>(cs.size()));
    rep.c_iter.push_back(std::move(cs));
    rep.rate_bits.push_back(std::move(rates));
  }
  return rep;
}

void emit_convergence_csv(const ConvergenceReport& rep,
                          const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os.precision(12);
  os << "scheme,iteration,c_iter,rate_bits\n";
  for (size_t si = 0; si < rep.schemes.size(); ++si)
    for (size_t k = 0; k < rep.c_iter[si].size(); ++k)
      os << to_string(rep.schemes[si]) << ',' << k + 1 << ','
         << rep.c_iter[si][k] << ',' << rep.rate_bits[si][k] << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

void apply_config(Scenario& s, const std::map<std::string, std::string>& kv) {
  const auto get_d = [&](const char* k, double& out) {
    auto it = kv.find(k);
    if (it != kv.end()) out = std::stod(it->second);
  };
  const auto get_i = [&](const char* k, auto& out) {
    auto it = kv.find(k);
    if (it != kv.end()) out = static_cast<std::decay_t<decltype(out)>>(
        std::stoll(it->second));
  };
  get_i("r", s.params.r);
  get_i("r_R", s.params.r_R);
  get_d("p_s", s.params.p_s);
  get_d("p_d", s.params.p_d);
  get_d("sigma_n2", s.params.sigma_n2);
  get_d("k", s.params.rician_k);
  get_d("d_ds", s.d_ds);
  get_i("drops", s.drops);
  get_i("seed", s.seed);
  get_d("epsilon", s.epsilon);
  get_i("max_iters", s.max_iters);
  get_i("threads", s.threads);
  if (auto it = kv.find("schemes"); it != kv.end()) {
    s.schemes.clear();
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (auto sch = scheme_from_string(tok)) s.schemes.push_back(*sch);
    }
  }
  if (auto it = kv.find("rho_grid"); it != kv.end()) {
    s.rho_grid.clear();
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) s.rho_grid.push_back(std::stod(tok));
  }
  if (auto it = kv.find("dr_ratio_grid"); it != kv.end()) {
    s.dr_ratio_grid.clear();
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      s.dr_ratio_grid.push_back(std::stod(tok));
  }
}

}  // namespace wpr
