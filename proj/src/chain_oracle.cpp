#include "secest/chain_oracle.hpp"

#include "secest/error.hpp"
#include "secest/kahan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace secest {

bool in_recurrent_set(int i, int j, int t_bar) { return j <= i - t_bar - 1 || j >= i; }

TruncatedChain::TruncatedChain(const ChannelModel& channels, int t_bar, int cap)
    : t_bar_(t_bar), cap_(cap) {
  validate(channels);
  const JointReception r = joint_reception(channels);
  const std::size_t n = static_cast<std::size_t>(cap + 1) * static_cast<std::size_t>(cap + 1);
  row_start_.reserve(n + 1);
  target_.reserve(4 * n);
  weight_.reserve(4 * n);
  row_start_.push_back(0);

  for (int i = 0; i <= cap; ++i) {
    const int i_next = std::min(i + 1, cap);
    for (int j = 0; j <= cap; ++j) {
      const int j_next = std::min(j + 1, cap);
      const std::size_t first = target_.size();
      if (i < t_bar) {
        add_edge(index(i_next, j_next), 1.0);
      } else {
        add_edge(index(0, 0), r.both);
        add_edge(index(i_next, 0), r.eaves_only);
        add_edge(index(0, j_next), r.legit_only);
        add_edge(index(i_next, j_next), r.neither);
      }
      CompensatedSum total;
      for (std::size_t e = first; e < target_.size(); ++e) total += weight_[e];
      const double norm = total.value();
      for (std::size_t e = first; e < target_.size(); ++e) weight_[e] /= norm;
      row_start_.push_back(target_.size());
    }
  }
}

void TruncatedChain::add_edge(std::size_t to, double p) {
  if (p <= 0.0) return;
  const std::size_t first = row_start_.back();
  for (std::size_t e = first; e < target_.size(); ++e) {
    if (target_[e] == to) {
      weight_[e] += p;
      return;
    }
  }
  target_.push_back(to);
  weight_.push_back(p);
}

double TruncatedChain::probability(int i, int j, int k, int l) const {
  const std::size_t row = index(i, j);
  const std::size_t to = index(k, l);
  for (std::size_t e = row_start_[row]; e < row_start_[row + 1]; ++e) {
    if (target_[e] == to) return weight_[e];
  }
  return 0.0;
}

double TruncatedChain::row_sum(int i, int j) const {
  const std::size_t row = index(i, j);
  double s = 0.0;
  for (std::size_t e = row_start_[row]; e < row_start_[row + 1]; ++e) s += weight_[e];
  return s;
}

void TruncatedChain::propagate(const std::vector<double>& phi, std::vector<double>& out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = size();
  for (std::size_t row = 0; row < n; ++row) {
    const double mass = phi[row];
    if (mass == 0.0) continue;
    for (std::size_t e = row_start_[row]; e < row_start_[row + 1]; ++e) {
      out[target_[e]] += mass * weight_[e];
    }
  }
}

TruncatedChain build_truncated_chain(const ChannelModel& channels, int t_bar, int cap) {
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  if (cap < 3 * t_bar + 10) {
    throw Error(ErrorKind::kHorizon, "oracle cap M = " + std::to_string(cap) +
                                         " is too small; need at least " +
                                         std::to_string(3 * t_bar + 10));
  }
  return TruncatedChain(channels, t_bar, cap);
}

OracleStationary stationary_power_iteration(const TruncatedChain& chain, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::kValidation, "tolerance must be positive");
  constexpr int kMaxIter = 1'000'000;
  const std::size_t n = chain.size();
  std::vector<double> phi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);

  OracleStationary out;
  out.cap = chain.cap();
  double residual = 0.0;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    chain.propagate(phi, next);
    residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) residual += std::abs(next[k] - phi[k]);
    phi.swap(next);
    if (residual < tol) break;
  }
  if (residual >= tol) {
    std::ostringstream os;
    os << "power iteration did not converge, residual " << residual;
    throw Error(ErrorKind::kConvergence, os.str());
  }

  CompensatedSum total;
  for (double p : phi) total += p;
  const double norm = total.value();
  for (double& p : phi) p /= norm;

  const int m = chain.cap();
  out.omega.assign(static_cast<std::size_t>(m) + 1, 0.0);
  out.pi.assign(static_cast<std::size_t>(m) + 1, 0.0);
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      const double p = phi[chain.index(i, j)];
      out.pi[static_cast<std::size_t>(i)] += p;
      out.omega[static_cast<std::size_t>(j)] += p;
    }
  }
  out.phi = std::move(phi);
  out.residual = residual;
  out.iterations = it + 1;
  return out;
}

}  // namespace secest
