#include "secest/optimizer.hpp"

#include "secest/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace secest {

const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::kFeasible:
      return "feasible";
    case Feasibility::kInfeasible:
      return "infeasible";
    case Feasibility::kUnconditional:
      return "unconditional";
  }
  return "?";
}

Feasibility feasibility_check(double b_lower, const CovarianceLadder& ladder) {
  if (ladder.marginal()) return Feasibility::kUnconditional;
  return b_lower <= *ladder.limit_trace() ? Feasibility::kFeasible : Feasibility::kInfeasible;
}

double lower_bound_at(const CovarianceLadder& ladder, const ChannelModel& channels, int t_bar,
                      int horizon) {
  const int n = std::max(horizon, min_bracket_horizon(t_bar));
  return truncated_lower_bound(ladder, eaves_stationary(channels, t_bar, n));
}

namespace {

std::string infeasible_message(double b_lower, const CovarianceLadder& ladder, const char* why) {
  std::ostringstream os;
  os.precision(10);
  os << why << ": b_lower = " << b_lower;
  if (auto limit = ladder.limit_trace()) os << ", limit trace = " << *limit;
  return os.str();
}

// Evaluates L on a private ladder that grows with the horizon demanded.
class LowerBoundEvaluator {
 public:
  LowerBoundEvaluator(const CovarianceLadder& ladder, const ChannelModel& channels, int horizon)
      : ladder_(&ladder), channels_(channels), horizon_(horizon) {}

  double operator()(int t_bar) {
    const int n = std::max(horizon_, min_bracket_horizon(t_bar));
    ladder_ = &ensure_depth(*ladder_, n + 1, storage_);
    return lower_bound_at(*ladder_, channels_, t_bar, horizon_);
  }

  EavesBracket bracket(int t_bar) {
    const int n = std::max(horizon_, min_bracket_horizon(t_bar));
    ladder_ = &ensure_depth(*ladder_, n + 1, storage_);
    return eaves_bracket_at(*ladder_, channels_, t_bar, horizon_);
  }

 private:
  const CovarianceLadder* ladder_;
  std::optional<CovarianceLadder> storage_;
  ChannelModel channels_;
  int horizon_;
};

}  // namespace

ThresholdSolution bisect_threshold(double b_lower, int horizon, const CovarianceLadder& ladder,
                                   const ChannelModel& channels) {
  if (!(b_lower >= 0.0)) throw Error(ErrorKind::kValidation, "b_lower must be non-negative");
  if (horizon < 1) throw Error(ErrorKind::kHorizon, "horizon N must be >= 1");
  validate(channels);
  if (feasibility_check(b_lower, ladder) == Feasibility::kInfeasible) {
    throw Error(ErrorKind::kInfeasible,
                infeasible_message(b_lower, ladder, "requested floor exceeds the open-loop limit"));
  }

  LowerBoundEvaluator lower(ladder, channels, horizon);
  ThresholdSolution sol;
  sol.b_lower = b_lower;
  sol.horizon = horizon;

  const double at_zero = lower(0);
  if (at_zero >= b_lower) {
    sol.t_opt = 0;
    sol.lower_at_opt = at_zero;
    sol.trace.emplace_back(0, 0);
    return sol;
  }

  constexpr int kCap = 1 << 20;
  int t_min = 0;
  int t_max = 1;
  double at_max = lower(t_max);
  while (at_max < b_lower) {
    t_min = t_max;
    if (t_max >= kCap) {
      throw Error(ErrorKind::kInfeasible,
                  infeasible_message(b_lower, ladder, "no threshold up to 2^20 meets the floor"));
    }
    t_max *= 2;
    at_max = lower(t_max);
  }
  sol.trace.emplace_back(t_min, t_max);

  while (t_min < t_max - 1) {
    const int mid = t_min + (t_max - t_min + 1) / 2;  // ceil((t_min + t_max) / 2)
    const double at_mid = lower(mid);
    if (at_mid < b_lower) {
      t_min = mid;
    } else {
      t_max = mid;
      at_max = at_mid;
    }
    sol.trace.emplace_back(t_min, t_max);
  }
  sol.t_opt = t_max;
  sol.lower_at_opt = at_max;
  return sol;
}

OptimalityReport optimality_report(const ThresholdSolution& sol, int horizon, double b_lower,
                                   const CovarianceLadder& ladder, const ChannelModel& channels) {
  OptimalityReport rep;
  if (sol.t_opt == 0) {
    rep.certified_optimal = true;
    return rep;
  }
  LowerBoundEvaluator eval(ladder, channels, horizon);
  const EavesBracket prev = eval.bracket(sol.t_opt - 1);
  if (prev.upper() < b_lower) {
    rep.certified_optimal = true;
    return rep;
  }
  int first = sol.t_opt;
  for (int t = 0; t < sol.t_opt; ++t) {
    if (eval.bracket(t).upper() >= b_lower) {
      first = t;
      break;
    }
  }
  rep.gap_upper = sol.t_opt - first;
  return rep;
}

ThresholdSolution solve_threshold(double b_lower, int horizon, const CovarianceLadder& ladder,
                                  const ChannelModel& channels) {
  ThresholdSolution sol = bisect_threshold(b_lower, horizon, ladder, channels);
  if (sol.t_opt > 0) {
    LowerBoundEvaluator eval(ladder, channels, horizon);
    sol.bracket_at_prev = eval.bracket(sol.t_opt - 1);
  }
  const OptimalityReport rep = optimality_report(sol, horizon, b_lower, ladder, channels);
  sol.certified_optimal = rep.certified_optimal;
  sol.gap_upper = rep.gap_upper;
  return sol;
}

}  // namespace secest
