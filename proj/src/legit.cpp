#include "secest/legit.hpp"

#include "secest/error.hpp"
#include "secest/kahan.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace secest {
namespace {

void check_rate(double lambda_eff) {
  if (!(lambda_eff > 0.0) || lambda_eff > 1.0) {
    throw Error(ErrorKind::kDegenerateChannel,
                "effective reception rate must lie in (0, 1]");
  }
}

// Bound on sum_{j > last} pi0 q^{j - t} tr_j given tr_j <= h + s j.
double tail_bound(const TraceEnvelope& env, double pi0, double q, int t_bar, int last) {
  if (q <= 0.0) return 0.0;
  if (!env.bounded) return std::numeric_limits<double>::infinity();
  const double w = pi0 * std::pow(q, last - t_bar);
  const double one_minus = 1.0 - q;
  return w * (env.at(last) * q / one_minus + env.slope * q / (one_minus * one_minus));
}

}  // namespace

LegitStationary pi_distribution(double lambda_eff, int t_bar, int max_index) {
  check_rate(lambda_eff);
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  if (max_index < t_bar) throw Error(ErrorKind::kHorizon, "max_index must be >= t_bar");

  const double pi0 = lambda_eff / (lambda_eff * t_bar + 1.0);
  const double q = 1.0 - lambda_eff;
  LegitStationary out;
  out.t_bar = t_bar;
  out.pi.resize(static_cast<std::size_t>(max_index) + 1);
  double w = pi0;
  for (int j = 0; j <= max_index; ++j) {
    if (j > t_bar) w *= q;
    out.pi[static_cast<std::size_t>(j)] = w;
  }
  // sum_{j > M} pi0 q^{j - t} = pi0 q^{M - t + 1} / lambda
  out.tail_mass = pi0 * std::pow(q, max_index - t_bar + 1) / lambda_eff;
  return out;
}

double objective_j(const CovarianceLadder& ladder, double lambda_eff, int t_bar,
                   std::optional<double> tol) {
  check_rate(lambda_eff);
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  if (tol && !(*tol > 0.0)) throw Error(ErrorKind::kValidation, "tolerance must be positive");

  const double pi0 = lambda_eff / (lambda_eff * t_bar + 1.0);
  const double q = 1.0 - lambda_eff;
  const auto& env = ladder.envelope();

  std::optional<CovarianceLadder> storage;
  const CovarianceLadder* lad = &ensure_depth(ladder, t_bar + 64, storage);

  CompensatedSum sum;
  for (int j = 0; j <= t_bar; ++j) sum += pi0 * lad->trace(j);
  if (q <= 0.0) return sum.value();

  // Without a certified envelope (A not power bounded) stop after a run of
  // negligible terms instead.
  int quiet_run = 0;
  double w = pi0;
  for (int j = t_bar + 1;; ++j) {
    if (j > lad->depth()) lad = &ensure_depth(*lad, 2 * j, storage);
    w *= q;
    const double term = w * lad->trace(j);
    sum += term;
    const double target = tol ? *tol : 1e-9 * sum.value();
    if (env.bounded) {
      if (tail_bound(env, pi0, q, t_bar, j) < target) break;
    } else {
      quiet_run = term < 1e-3 * target ? quiet_run + 1 : 0;
      if (quiet_run >= 64) break;
    }
    if (j > 50'000'000) throw Error(ErrorKind::kNumerical, "objective tail did not converge");
  }
  return sum.value();
}

}  // namespace secest
