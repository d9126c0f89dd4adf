#pragma once

#include "secest/config.hpp"
#include "secest/eaves.hpp"
#include "secest/legit.hpp"
#include "secest/optimizer.hpp"
#include "secest/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace secest {

struct AnalyzeReport {
  Matrix p_bar;
  double rho_a = 0.0;
  std::optional<double> limit_trace;
  int t_bar = 0;
  int horizon = 0;          // after raising to 3 t_bar + 1 if needed
  bool horizon_raised = false;
  double objective = 0.0;   // J(t_bar)
  EavesBracket bracket;
  LegitStationary pi;
  EavesStationary eaves;
};

AnalyzeReport analyze(const RunConfig& config);
ThresholdSolution optimize(const RunConfig& config);
SimResult simulate(const RunConfig& config, int jobs);

struct SweepRow {
  double b_lower = 0.0;
  int horizon = 0;
  bool feasible = true;
  int t_opt = -1;
  double objective = 0.0;  // J(t_opt)
  double lower = 0.0;      // L(N, t_opt)
  double upper = 0.0;      // L + b
  double mc_eaves = 0.0;   // NaN when simulation is off
  double mc_legit = 0.0;
};

/// Grid is b_lower (outer) x N (inner). An axis left empty falls back to the
/// solver value; both empty yields no rows. Cells run on up to `jobs` threads
/// and come back in grid order. Every cell's Monte Carlo uses the same seed.
std::vector<SweepRow> sweep(const RunConfig& config, int jobs);

struct OracleCheckRow {
  int t_bar = 0;
  std::string quantity;  // phi_0j, omega_j or pi_j
  int window = 0;        // entries compared: j = 0..window
  double max_abs_dev = 0.0;
  bool pass = false;
};

inline constexpr double kOracleTolerance = 1e-8;

std::vector<OracleCheckRow> oracle_check(const RunConfig& config, int jobs);

void write_analyze(const AnalyzeReport& report, const RunConfig& config,
                   const std::filesystem::path& dir, std::ostream& log);
void write_optimize(const ThresholdSolution& sol, const RunConfig& config,
                    const std::filesystem::path& dir, std::ostream& log);
void write_simulate(const SimResult& result, const RunConfig& config,
                    const std::filesystem::path& dir, std::ostream& log);
void write_sweep(const std::vector<SweepRow>& rows, const RunConfig& config,
                 const std::filesystem::path& dir, std::ostream& log);
void write_oracle_check(const std::vector<OracleCheckRow>& rows, const RunConfig& config,
                        const std::filesystem::path& dir, std::ostream& log);

/// Runs one subcommand end to end, writing artifacts under `out_dir` and a
/// human-readable summary to `log`. Library errors are reported on `err` and
/// mapped to exit codes (2 config, 3 infeasible, 4 numerical).
int run_command(const std::string& name, const RunConfig& config,
                const std::filesystem::path& out_dir, int jobs, std::ostream& log,
                std::ostream& err);

}  // namespace secest
