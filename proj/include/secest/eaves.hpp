#pragma once

#include "secest/model.hpp"

#include <span>
#include <vector>

namespace secest {

/// Stationary quantities of the joint (legitimate, eavesdropper) holding
/// index chain under threshold t_bar, truncated at horizon N.
///
/// Per scheduled slot let B, Lo, Eo, a be the probabilities that both, only
/// the legitimate estimator, only the eavesdropper, or neither receive, and
/// c = 1 / (lambda t + 1) with lambda = B + Lo. With R_j the mass of column j
/// restricted to i >= t,
///
///   phi_0     = B c
///   R_j       = a^j Eo c                       j < t
///   R_j       = phi_{j-t} + a R_{j-1}           j >= t   (a R_{-1} = Eo c)
///   phi_{j+1} = Lo R_j
///   omega_j   = sum_{i < min(t, j+1)} phi_{j-i} + R_j
///
/// Every term is non-negative. When the command channel is reliable the
/// receptions are independent, Lo Eo = a B, and the row reduces to
/// phi_{j+1} = a phi_j + Lo phi_{j-t} with a = (1-lambda)(1-lambda_e).
struct EavesStationary {
  int t_bar = 0;
  int horizon = 0;
  double alpha = 0.0;     // P(neither receives | scheduled)
  double beta = 0.0;      // P(only the legitimate estimator receives | scheduled)
  double gamma = 0.0;     // (a + b)^{1 / (2 (t + 1))}
  double legit_rate = 0.0;
  double eaves_rate = 0.0;
  std::vector<double> phi_row;  // j = 0..N
  std::vector<double> omega;    // j = 0..N
};

/// Throws kHorizon if N < t_bar.
std::vector<double> phi_row(const ChannelModel& channels, int t_bar, int horizon);

/// Requires phi.size() > horizon. Throws kNumerical if an entry comes out
/// below -1e-12 (tiny negative round-off is flushed to zero).
std::vector<double> omega_distribution(std::span<const double> phi,
                                       const ChannelModel& channels, int t_bar,
                                       int horizon);

EavesStationary eaves_stationary(const ChannelModel& channels, int t_bar, int horizon);

/// Upper bound on the omitted mass sum_{j > N} omega_j from the decay envelope
/// omega_j <= a^{j-N} omega_N + (j - N)(1 + b t) phi_0 gamma^{j-1-3t}:
/// a/(1-a) omega_N + (1 + b t) phi_0 gamma^{N-1-3t} gamma/(1 - gamma)^2.
/// Infinite when the eavesdropper never receives.
double omega_tail_envelope(const EavesStationary& eaves);

/// Smallest horizon for which the omega decay envelope is valid.
inline int min_bracket_horizon(int t_bar) { return 3 * t_bar + 1; }

/// Certified bracket [lower, lower + gap] on the eavesdropper's long-run
/// average tr E[P_k^e].
struct EavesBracket {
  double lower = 0.0;
  double gap = 0.0;
  int horizon = 0;

  double upper() const { return lower + gap; }
};

/// lower = sum_{j<=N} omega_j tr_j + (1 - sum omega) tr_{N+1}.
double truncated_lower_bound(const CovarianceLadder& ladder, const EavesStationary& eaves);

/// Throws kHorizon (naming the minimal admissible N) if N < 3 t_bar + 1.
/// The gap bounds sum_{k > N+1} (T_k - T_{k-1}) P(n^e >= k), using
/// P(n^e >= k) <= M (1 - e)^{floor((k-N-1)/(t+1))} with M the omitted mass:
/// any t + 1 consecutive steps contain a scheduled slot. It is +inf when the
/// ladder envelope is unbounded or the eavesdropper never receives.
EavesBracket eaves_bracket(const CovarianceLadder& ladder, const EavesStationary& eaves);

/// Convenience for sweeps: raises N to max(N, 3 t_bar + 1) before evaluating.
EavesBracket eaves_bracket_at(const CovarianceLadder& ladder, const ChannelModel& channels,
                              int t_bar, int horizon);

}  // namespace secest
