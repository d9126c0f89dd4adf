#pragma once

#include "secest/model.hpp"

#include <vector>

namespace secest {

/// Explicit truncation of the joint holding-index chain s_k = (i, j) to the
/// box 0 <= i, j <= M. Every state of the box is kept; those outside the
/// recurrent class (j in [max(i - t, 0), i - 1]) simply end up with zero
/// stationary mass. Moves that would leave the box saturate at M.
class TruncatedChain {
 public:
  TruncatedChain(const ChannelModel& channels, int t_bar, int cap);

  int t_bar() const { return t_bar_; }
  int cap() const { return cap_; }
  std::size_t size() const { return row_start_.size() - 1; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cap_ + 1) +
           static_cast<std::size_t>(j);
  }

  /// Transition probability from (i, j) to (k, l); zero if not an edge.
  double probability(int i, int j, int k, int l) const;

  /// Sum of the outgoing probabilities of row (i, j).
  double row_sum(int i, int j) const;

  /// phi <- phi P.
  void propagate(const std::vector<double>& phi, std::vector<double>& out) const;

 private:
  void add_edge(std::size_t to, double p);

  int t_bar_;
  int cap_;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> target_;
  std::vector<double> weight_;
};

/// True for states in the recurrent class: j in [0, i - t - 1] or j >= i.
bool in_recurrent_set(int i, int j, int t_bar);

/// Builds the chain; throws kHorizon when cap < 3 t_bar + 10.
TruncatedChain build_truncated_chain(const ChannelModel& channels, int t_bar, int cap);

struct OracleStationary {
  int cap = 0;
  std::vector<double> phi;        // row-major (cap + 1)^2
  std::vector<double> omega;      // eavesdropper marginal, j = 0..cap
  std::vector<double> pi;         // legitimate marginal, i = 0..cap
  double residual = 0.0;          // ||phi P - phi||_1
  int iterations = 0;

  double at(int i, int j) const {
    return phi[static_cast<std::size_t>(i) * static_cast<std::size_t>(cap + 1) +
               static_cast<std::size_t>(j)];
  }
};

/// Power iteration from the uniform distribution until ||phi P - phi||_1 <
/// tol. Throws kConvergence after 10^6 sweeps.
OracleStationary stationary_power_iteration(const TruncatedChain& chain, double tol = 1e-12);

}  // namespace secest
