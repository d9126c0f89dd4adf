#pragma once

#include "secest/eaves.hpp"
#include "secest/model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace secest {

enum class Feasibility { kFeasible, kInfeasible, kUnconditional };

const char* to_string(Feasibility f);

/// For rho(A) < 1 the eavesdropper's average covariance can never exceed the
/// open-loop limit, so b_lower must not exceed its trace. For rho(A) = 1 any
/// floor is reachable.
Feasibility feasibility_check(double b_lower, const CovarianceLadder& ladder);

/// L(max(N, 3t + 1), t).
double lower_bound_at(const CovarianceLadder& ladder, const ChannelModel& channels,
                      int t_bar, int horizon);

struct ThresholdSolution {
  int t_opt = 0;
  double b_lower = 0.0;
  int horizon = 0;
  double lower_at_opt = 0.0;
  std::optional<EavesBracket> bracket_at_prev;  // empty when t_opt == 0
  bool certified_optimal = false;
  int gap_upper = 0;
  std::vector<std::pair<int, int>> trace;       // (t_min, t_max) after each step
};

/// Smallest t with L(N, t) >= b_lower, found by bisection. t_max is located
/// by doubling from 1 (cap 2^20). Throws kInfeasible when b_lower exceeds the
/// limit trace or the cap is hit.
ThresholdSolution bisect_threshold(double b_lower, int horizon, const CovarianceLadder& ladder,
                                   const ChannelModel& channels);

struct OptimalityReport {
  bool certified_optimal = false;
  int gap_upper = 0;
};

/// Certified when t_opt = 0 or L + b at t_opt - 1 is still below b_lower; in
/// that case the true optimum equals t_opt and the gap is 0. Otherwise
/// gap_upper = t_opt - min{t : L(N, t) + b(N, t) >= b_lower}, found by a
/// linear scan since L + b need not be monotone.
OptimalityReport optimality_report(const ThresholdSolution& sol, int horizon, double b_lower,
                                   const CovarianceLadder& ladder, const ChannelModel& channels);

/// bisect_threshold followed by optimality_report, results merged.
ThresholdSolution solve_threshold(double b_lower, int horizon, const CovarianceLadder& ladder,
                                  const ChannelModel& channels);

}  // namespace secest
