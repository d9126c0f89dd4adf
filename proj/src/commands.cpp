#include "secest/commands.hpp"

#include "secest/chain_oracle.hpp"
#include "secest/csv.hpp"
#include "secest/error.hpp"
#include "secest/kahan.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace secest {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CovarianceLadder ladder_for(const RunConfig& cfg, int depth) {
  return build_ladder(to_system_model(cfg.model), std::max(depth, 256));
}

SimConfig sim_config(const RunConfig& cfg, int jobs) {
  SimConfig s;
  s.horizon = cfg.sim.horizon;
  s.seed = cfg.sim.seed;
  s.replications = cfg.sim.replications;
  s.mode = cfg.sim.mode;
  s.burn_in = cfg.sim.burn_in;
  s.jobs = jobs;
  return s;
}

int require_t_bar(const RunConfig& cfg) {
  if (!cfg.solver.t_bar) throw Error(ErrorKind::kConfig, "config: field 'solver.t_bar' is required");
  return *cfg.solver.t_bar;
}

double require_b_lower(const RunConfig& cfg) {
  if (!cfg.solver.b_lower) {
    throw Error(ErrorKind::kConfig, "config: field 'solver.b_lower' is required");
  }
  return *cfg.solver.b_lower;
}

std::string provenance(const RunConfig& cfg) {
  return "seed=" + std::to_string(cfg.sim.seed) + " N=" + std::to_string(cfg.solver.N);
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + (dir / name).string());
  return out;
}

// Runs fn(k) for k in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double max_abs_deviation(const std::vector<double>& a, const std::vector<double>& b, int window) {
  double worst = 0.0;
  for (int j = 0; j <= window; ++j) {
    const auto k = static_cast<std::size_t>(j);
    worst = std::max(worst, std::abs(a.at(k) - b.at(k)));
  }
  return worst;
}

}  // namespace

AnalyzeReport analyze(const RunConfig& cfg) {
  const int t_bar = require_t_bar(cfg);
  AnalyzeReport rep;
  rep.t_bar = t_bar;
  rep.horizon = std::max(cfg.solver.N, min_bracket_horizon(t_bar));
  rep.horizon_raised = rep.horizon != cfg.solver.N;

  const CovarianceLadder ladder = ladder_for(cfg, rep.horizon + 2);
  const ChannelModel& ch = cfg.channels;
  rep.p_bar = ladder.p_bar();
  rep.rho_a = ladder.rho_a();
  rep.limit_trace = ladder.limit_trace();
  const double legit_rate = joint_reception(ch).legit();
  rep.objective = objective_j(ladder, legit_rate, t_bar, cfg.solver.tol);
  rep.pi = pi_distribution(legit_rate, t_bar, rep.horizon);
  rep.eaves = eaves_stationary(ch, t_bar, rep.horizon);
  rep.bracket = eaves_bracket(ladder, rep.eaves);
  return rep;
}

ThresholdSolution optimize(const RunConfig& cfg) {
  const double b_lower = require_b_lower(cfg);
  const CovarianceLadder ladder = ladder_for(cfg, cfg.solver.N + 2);
  return solve_threshold(b_lower, cfg.solver.N, ladder, cfg.channels);
}

SimResult simulate(const RunConfig& cfg, int jobs) {
  const int t_bar = require_t_bar(cfg);
  const SimConfig sc = sim_config(cfg, jobs);
  if (cfg.sim.mode == SimMode::kFullKf) {
    return simulate_full_kf(sc, to_system_model(cfg.model), cfg.channels, t_bar);
  }
  const CovarianceLadder ladder = ladder_for(cfg, 1024);
  return simulate_indices(sc, cfg.channels, t_bar, ladder);
}

std::vector<SweepRow> sweep(const RunConfig& cfg, int jobs) {
  if (cfg.sweep.b_lower.empty() && cfg.sweep.N.empty()) return {};
  std::vector<double> bs = cfg.sweep.b_lower;
  std::vector<int> ns = cfg.sweep.N;
  if (bs.empty()) bs.push_back(require_b_lower(cfg));
  if (ns.empty()) ns.push_back(cfg.solver.N);

  const int max_n = *std::max_element(ns.begin(), ns.end());
  const CovarianceLadder ladder = ladder_for(cfg, max_n + 2);
  const double legit_rate = joint_reception(cfg.channels).legit();

  std::vector<SweepRow> rows(bs.size() * ns.size());
  for (std::size_t a = 0; a < bs.size(); ++a) {
    for (std::size_t b = 0; b < ns.size(); ++b) {
      rows[a * ns.size() + b].b_lower = bs[a];
      rows[a * ns.size() + b].horizon = ns[b];
    }
  }
  parallel_for(rows.size(), jobs, [&](std::size_t k) {
    SweepRow& row = rows[k];
    try {
      const ThresholdSolution sol = bisect_threshold(row.b_lower, row.horizon, ladder, cfg.channels);
      row.t_opt = sol.t_opt;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInfeasible) throw;
      row.feasible = false;
      row.objective = row.lower = row.upper = row.mc_eaves = row.mc_legit = kNaN;
      return;
    }
    row.objective = objective_j(ladder, legit_rate, row.t_opt, cfg.solver.tol);
    const EavesBracket br = eaves_bracket_at(ladder, cfg.channels, row.t_opt, row.horizon);
    row.lower = br.lower;
    row.upper = br.upper();
    if (cfg.sweep.simulate) {
      const SimResult mc = simulate_indices(sim_config(cfg, 1), cfg.channels, row.t_opt, ladder);
      row.mc_eaves = mc.avg_trace_eaves;
      row.mc_legit = mc.avg_trace_legit;
    } else {
      row.mc_eaves = row.mc_legit = kNaN;
    }
  });
  return rows;
}

std::vector<OracleCheckRow> oracle_check(const RunConfig& cfg, int jobs) {
  const auto& ts = cfg.solver.oracle_thresholds;
  const int cap = cfg.solver.M_oracle;
  const int window = std::min(40, cap / 3);
  const double legit_rate = joint_reception(cfg.channels).legit();
  std::vector<std::vector<OracleCheckRow>> per(ts.size());

  parallel_for(ts.size(), jobs, [&](std::size_t k) {
    const int t = ts[k];
    const TruncatedChain chain = build_truncated_chain(cfg.channels, t, cap);
    const OracleStationary st = stationary_power_iteration(chain);
    const EavesStationary rec = eaves_stationary(cfg.channels, t, std::max(window, t));
    const LegitStationary pi = pi_distribution(legit_rate, t, std::max(window, t));

    std::vector<double> oracle_phi(static_cast<std::size_t>(window) + 1);
    for (int j = 0; j <= window; ++j) oracle_phi[static_cast<std::size_t>(j)] = st.at(0, j);

    auto make = [&](const char* name, double dev) {
      return OracleCheckRow{t, name, window, dev, dev <= kOracleTolerance};
    };
    per[k].push_back(make("phi_0j", max_abs_deviation(oracle_phi, rec.phi_row, window)));
    per[k].push_back(make("omega_j", max_abs_deviation(st.omega, rec.omega, window)));
    per[k].push_back(make("pi_j", max_abs_deviation(st.pi, pi.pi, window)));
  });

  std::vector<OracleCheckRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

void write_analyze(const AnalyzeReport& r, const RunConfig& cfg, const std::filesystem::path& dir,
                   std::ostream& log) {
  log.precision(10);
  if (r.horizon_raised) {
    log << "note: horizon raised from N = " << cfg.solver.N << " to " << r.horizon
        << " (needs N >= 3 t_bar + 1)\n";
  }
  log << "P_bar =\n" << r.p_bar << "\n";
  log << "trace(P_bar) = " << r.p_bar.trace() << "\n";
  log << "rho(A) = " << r.rho_a << (is_marginal(r.rho_a) ? " (marginally stable)" : "") << "\n";
  if (r.limit_trace) {
    log << "limit trace = " << *r.limit_trace << "\n";
  } else {
    log << "limit trace = inf\n";
  }
  log << "t_bar = " << r.t_bar << ", N = " << r.horizon << "\n";
  log << "J(t_bar) = " << r.objective << "\n";
  log << "eavesdropper bracket = [" << r.bracket.lower << ", " << r.bracket.upper() << "]\n";

  const std::string prov = provenance(cfg);
  {
    auto out = open_out(dir, "analyze.csv");
    CsvWriter w(out, prov,
                {"t_bar", "N", "rho_A", "trace_P_bar", "limit_trace", "J", "L", "L_plus_b"});
    w.row({static_cast<long long>(r.t_bar), static_cast<long long>(r.horizon), r.rho_a,
           r.p_bar.trace(), r.limit_trace.value_or(std::numeric_limits<double>::infinity()),
           r.objective, r.bracket.lower, r.bracket.upper()});
  }
  {
    auto out = open_out(dir, "pi.csv");
    CsvWriter w(out, prov, {"j", "pi_j"});
    for (std::size_t j = 0; j < r.pi.pi.size(); ++j) {
      w.row({static_cast<long long>(j), r.pi.pi[j]});
    }
  }
  {
    auto out = open_out(dir, "omega.csv");
    CsvWriter w(out, prov, {"j", "phi_0j", "omega_j", "cum_omega"});
    CompensatedSum cum;
    for (std::size_t j = 0; j < r.eaves.omega.size(); ++j) {
      cum += r.eaves.omega[j];
      w.row({static_cast<long long>(j), r.eaves.phi_row[j], r.eaves.omega[j], cum.value()});
    }
  }
}

void write_optimize(const ThresholdSolution& s, const RunConfig& cfg,
                    const std::filesystem::path& dir, std::ostream& log) {
  log.precision(10);
  log << "t_opt = " << s.t_opt << "  L(N, t_opt) = " << s.lower_at_opt << "\n";
  log << "certified optimal: " << (s.certified_optimal ? "yes" : "no")
      << ", gap upper bound: " << s.gap_upper << "\n";
  const double b_prev = s.bracket_at_prev ? s.bracket_at_prev->gap : kNaN;
  auto out = open_out(dir, "optimize.csv");
  CsvWriter w(out, provenance(cfg),
              {"b_lower", "N", "t_opt", "L_at_opt", "b_at_prev", "certified", "gap_upper"});
  w.row({s.b_lower, static_cast<long long>(s.horizon), static_cast<long long>(s.t_opt),
         s.lower_at_opt, b_prev, static_cast<long long>(s.certified_optimal ? 1 : 0),
         static_cast<long long>(s.gap_upper)});
}

void write_simulate(const SimResult& r, const RunConfig& cfg, const std::filesystem::path& dir,
                    std::ostream& log) {
  log.precision(10);
  log << "avg tr P (legit) = " << r.avg_trace_legit << " +- " << r.stderr_legit << "\n";
  log << "avg tr P (eaves) = " << r.avg_trace_eaves << " +- " << r.stderr_eaves << "\n";
  if (r.has_mse) {
    log << "mse (legit) = " << r.mse_legit << " +- " << r.stderr_mse_legit << "\n";
    log << "mse (eaves) = " << r.mse_eaves << " +- " << r.stderr_mse_eaves << "\n";
  }
  const std::string prov = provenance(cfg);
  {
    auto out = open_out(dir, "simulate.csv");
    CsvWriter w(out, prov,
                {"avg_trace_legit", "avg_trace_eaves", "stderr_legit", "stderr_eaves", "seed"});
    w.row({r.avg_trace_legit, r.avg_trace_eaves, r.stderr_legit, r.stderr_eaves,
           std::to_string(r.seed_used)});
  }
  if (r.has_mse) {
    auto out = open_out(dir, "simulate_mse.csv");
    CsvWriter w(out, prov, {"mse_legit", "mse_eaves", "stderr_mse_legit", "stderr_mse_eaves", "seed"});
    w.row({r.mse_legit, r.mse_eaves, r.stderr_mse_legit, r.stderr_mse_eaves,
           std::to_string(r.seed_used)});
  }
  {
    auto out = open_out(dir, "histogram.csv");
    CsvWriter w(out, prov, {"index", "p_legit_empirical", "p_eaves_empirical"});
    const std::size_t n = std::max(r.hist_legit.size(), r.hist_eaves.size());
    for (std::size_t k = 0; k < n; ++k) {
      w.row({static_cast<long long>(k), k < r.hist_legit.size() ? r.hist_legit[k] : 0.0,
             k < r.hist_eaves.size() ? r.hist_eaves[k] : 0.0});
    }
  }
}

void write_sweep(const std::vector<SweepRow>& rows, const RunConfig& cfg,
                 const std::filesystem::path& dir, std::ostream& log) {
  if (rows.empty()) {
    log << "warning: sweep grid is empty, nothing to do\n";
    return;
  }
  {
    auto out = open_out(dir, "sweep.csv");
    CsvWriter w(out, provenance(cfg),
                {"b_lower", "N", "t_opt", "J_t_opt", "L", "L_plus_b", "mc_eaves", "mc_legit"});
    for (const auto& r : rows) {
      w.row({r.b_lower, static_cast<long long>(r.horizon), static_cast<long long>(r.t_opt),
             r.objective, r.lower, r.upper, r.mc_eaves, r.mc_legit});
      if (!r.feasible) log << "warning: b_lower = " << r.b_lower << " is infeasible\n";
    }
  }
  log << "sweep: " << rows.size() << " rows written\n";
  if (!cfg.output.svg) return;

  auto chart = [&](const std::string& name, const std::string& axis, auto key, auto select) {
    std::vector<double> x;
    ChartSeries t{"t_opt", {}}, j{"J(t_opt)", {}}, l{"L", {}}, mc{"mc_eaves", {}};
    for (const auto& r : rows) {
      if (!select(r)) continue;
      x.push_back(key(r));
      t.y.push_back(r.t_opt);
      j.y.push_back(r.objective);
      l.y.push_back(r.lower);
      mc.y.push_back(r.mc_eaves);
    }
    auto out = open_out(dir, name + "_threshold.svg");
    out << render_line_chart("threshold vs " + axis, axis, x, {t});
    auto out2 = open_out(dir, name + "_covariance.svg");
    out2 << render_line_chart("average covariance vs " + axis, axis, x, {j, l, mc});
  };
  if (cfg.sweep.b_lower.size() > 1) {
    const int first_n = rows.front().horizon;
    chart("sweep_b_lower", "b_lower", [](const SweepRow& r) { return r.b_lower; },
          [&](const SweepRow& r) { return r.horizon == first_n; });
  }
  if (cfg.sweep.N.size() > 1) {
    const double first_b = rows.front().b_lower;
    chart("sweep_N", "N", [](const SweepRow& r) { return static_cast<double>(r.horizon); },
          [&](const SweepRow& r) { return r.b_lower == first_b; });
  }
}

void write_oracle_check(const std::vector<OracleCheckRow>& rows, const RunConfig& cfg,
                        const std::filesystem::path& dir, std::ostream& log) {
  auto out = open_out(dir, "oracle_check.csv");
  CsvWriter w(out, provenance(cfg) + " M=" + std::to_string(cfg.solver.M_oracle),
              {"t_bar", "quantity", "window", "max_abs_dev", "pass"});
  for (const auto& r : rows) {
    w.row({static_cast<long long>(r.t_bar), r.quantity, static_cast<long long>(r.window),
           r.max_abs_dev, static_cast<long long>(r.pass ? 1 : 0)});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s t_bar=%d %-8s max|dev|=%.3e (j<=%d)\n",
                  r.pass ? "PASS" : "FAIL", r.t_bar, r.quantity.c_str(), r.max_abs_dev, r.window);
    log << buf;
  }
}

int run_command(const std::string& name, const RunConfig& cfg, const std::filesystem::path& dir,
                int jobs, std::ostream& log, std::ostream& err) {
  try {
    if (name == "analyze") {
      write_analyze(analyze(cfg), cfg, dir, log);
    } else if (name == "optimize") {
      const CovarianceLadder ladder = ladder_for(cfg, cfg.solver.N + 2);
      const double b = require_b_lower(cfg);
      if (feasibility_check(b, ladder) == Feasibility::kInfeasible) {
        err << "error: b_lower = " << b << " exceeds the limit trace " << *ladder.limit_trace()
            << "; the floor cannot be met by any threshold\n";
        return 3;
      }
      write_optimize(optimize(cfg), cfg, dir, log);
    } else if (name == "simulate") {
      write_simulate(simulate(cfg, jobs), cfg, dir, log);
    } else if (name == "sweep") {
      write_sweep(sweep(cfg, jobs), cfg, dir, log);
    } else if (name == "oracle-check") {
      const auto rows = oracle_check(cfg, jobs);
      write_oracle_check(rows, cfg, dir, log);
      const bool ok = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
      log << (ok ? "oracle check passed\n" : "oracle check FAILED\n");
      return ok ? 0 : 4;
    } else {
      err << "error: unknown command '" << name << "'\n";
      return 2;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace secest
