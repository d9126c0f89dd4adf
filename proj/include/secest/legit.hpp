#pragma once

#include "secest/model.hpp"

#include <optional>
#include <vector>

namespace secest {

/// Stationary law of the legitimate holding index n_k under threshold t_bar:
/// flat at lambda / (lambda t_bar + 1) up to t_bar, geometric with ratio
/// (1 - lambda) afterwards. `tail_mass` is the closed-form mass beyond
/// pi.size() - 1.
struct LegitStationary {
  int t_bar = 0;
  std::vector<double> pi;
  double tail_mass = 0.0;
};

/// `lambda_eff` is the end-to-end success rate of a scheduled transmission
/// (lambda * lambda_v). Requires max_index >= t_bar.
LegitStationary pi_distribution(double lambda_eff, int t_bar, int max_index);

/// Long-run average tr E[P_k] for threshold t_bar. The infinite sum is cut
/// where the ladder envelope certifies the remainder is below `tol`; the
/// returned value is the truncated (lower) sum. Without `tol` the cut is
/// relative, 1e-9 of the running sum. Throws kValidation if tol <= 0.
double objective_j(const CovarianceLadder& ladder, double lambda_eff, int t_bar,
                   std::optional<double> tol = std::nullopt);

}  // namespace secest
