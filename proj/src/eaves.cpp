#include "secest/eaves.hpp"

#include "secest/error.hpp"
#include "secest/kahan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace secest {
namespace {

struct Rates {
  double alpha;
  double beta;
  double legit;
  double eaves;
  double both;
  double eaves_only;
};

Rates rates_for(const ChannelModel& channels) {
  validate(channels);
  const JointReception j = joint_reception(channels);
  return Rates{j.neither, j.legit_only, j.legit(), j.eaves(), j.both, j.eaves_only};
}

void check_threshold(int t_bar, int horizon) {
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  if (horizon < t_bar) {
    throw Error(ErrorKind::kHorizon, "horizon N = " + std::to_string(horizon) +
                                         " is below the threshold " + std::to_string(t_bar));
  }
}

}  // namespace

std::vector<double> phi_row(const ChannelModel& channels, int t_bar, int horizon) {
  check_threshold(t_bar, horizon);
  const Rates r = rates_for(channels);
  std::vector<double> phi(static_cast<std::size_t>(horizon) + 1, 0.0);
  const double c = 1.0 / (r.legit * t_bar + 1.0);
  phi[0] = r.both * c;
  // carry = neither * R_{j-1}, where R_j is the mass of column j with i >= t.
  double carry = r.eaves_only * c;
  for (int j = 0; j < horizon; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const double rj = (j >= t_bar ? phi[u - static_cast<std::size_t>(t_bar)] : 0.0) + carry;
    phi[u + 1] = r.beta * rj;
    carry = r.alpha * rj;
  }
  return phi;
}

std::vector<double> omega_distribution(std::span<const double> phi,
                                       const ChannelModel& channels, int t_bar,
                                       int horizon) {
  check_threshold(t_bar, horizon);
  if (phi.size() <= static_cast<std::size_t>(horizon)) {
    throw Error(ErrorKind::kHorizon, "phi row is shorter than the horizon");
  }
  const Rates r = rates_for(channels);
  std::vector<double> omega(static_cast<std::size_t>(horizon) + 1, 0.0);
  const double c = 1.0 / (r.legit * t_bar + 1.0);

  // omega_j = sum_{i < min(t, j + 1)} phi_{j - i} + R_j; the first part is a
  // sliding window over the phi row.
  CompensatedSum window;
  double carry = r.eaves_only * c;
  for (int j = 0; j <= horizon; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const double rj = (j >= t_bar ? phi[u - static_cast<std::size_t>(t_bar)] : 0.0) + carry;
    carry = r.alpha * rj;
    if (t_bar > 0) {
      window += phi[u];
      if (j >= t_bar) window += -phi[u - static_cast<std::size_t>(t_bar)];
    }
    const double w = window.value() + rj;
    if (w < -1e-12 || !std::isfinite(w)) {
      std::ostringstream os;
      os << "omega_" << j << " = " << w << " is invalid: inconsistent parameters or precision loss";
      throw Error(ErrorKind::kNumerical, os.str());
    }
    omega[u] = std::max(w, 0.0);
  }
  return omega;
}

EavesStationary eaves_stationary(const ChannelModel& channels, int t_bar, int horizon) {
  const Rates r = rates_for(channels);
  EavesStationary out;
  out.t_bar = t_bar;
  out.horizon = horizon;
  out.alpha = r.alpha;
  out.beta = r.beta;
  out.gamma = std::pow(r.alpha + r.beta, 1.0 / (2.0 * (t_bar + 1.0)));
  out.legit_rate = r.legit;
  out.eaves_rate = r.eaves;
  out.phi_row = phi_row(channels, t_bar, horizon);
  out.omega = omega_distribution(out.phi_row, channels, t_bar, horizon);
  return out;
}

namespace {

// Polynomial-times-geometric decay envelope
//   omega_j <= a^{j-N} omega_N + (j - N) K gamma^{j-1-3t},  K = (1 + b t) phi_0,
// summed over j > N.
double decay_envelope_mass(const EavesStationary& e) {
  if (e.gamma >= 1.0) return std::numeric_limits<double>::infinity();
  const double a = e.alpha;
  const double g = e.gamma;
  const double k = (1.0 + e.beta * e.t_bar) * e.phi_row.front();
  const double geometric = e.omega.back() > 0.0 ? e.omega.back() * a / (1.0 - a) : 0.0;
  // sum_{m>=1} m g^m = g / (1 - g)^2
  const double delayed = k > 0.0 ? k * std::pow(g, e.horizon - 1 - 3 * e.t_bar) * g /
                                       ((1.0 - g) * (1.0 - g))
                                 : 0.0;
  return geometric + delayed;
}

// Every window of t + 1 steps holds a scheduled slot, and each scheduled slot
// reaches the eavesdropper with probability e independently of the past, so
//   P(n^e >= k) <= M rho^{floor((k - N - 1) / (t + 1))},  k > N,
// with M = P(n^e > N) = 1 - sum_{j<=N} omega_j and rho = 1 - e. Summation by
// parts gives the exact gap as sum_{k >= N+2} (T_k - T_{k-1}) P(n^e >= k);
// past the ladder depth D the trace envelope closes the sum.
double gap_bound(const CovarianceLadder& ladder, const EavesStationary& e, double missing) {
  if (missing <= 0.0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const TraceEnvelope& env = ladder.envelope();
  const double rho = 1.0 - e.eaves_rate;
  if (!env.bounded || !(rho < 1.0)) return inf;

  const long long n = e.horizon;
  const long long period = e.t_bar + 1LL;
  const long long depth = std::min(n + 1 + 64 * period, n + 1 + (1LL << 22));
  std::optional<CovarianceLadder> storage;
  const CovarianceLadder& lad = ensure_depth(ladder, static_cast<int>(depth), storage);

  auto weight = [&](long long k) {
    return std::pow(rho, static_cast<double>((k - n - 1) / period));
  };
  CompensatedSum sum;
  for (long long k = n + 2; k <= depth; ++k) {
    const double step = lad.trace(static_cast<int>(k)) - lad.trace(static_cast<int>(k - 1));
    sum += std::max(step, 0.0) * weight(k);
  }
  const double head = env.at(static_cast<double>(depth + 1)) - lad.trace(static_cast<int>(depth));
  sum += std::max(head, 0.0) * weight(depth + 1);
  sum += env.slope * static_cast<double>(period) * weight(depth + 2) / (1.0 - rho);
  return missing * sum.value();
}

double omega_sum(const EavesStationary& e) {
  CompensatedSum s;
  for (double w : e.omega) s += w;
  return s.value();
}

}  // namespace

double omega_tail_envelope(const EavesStationary& e) {
  return decay_envelope_mass(e);
}

double truncated_lower_bound(const CovarianceLadder& ladder, const EavesStationary& e) {
  std::optional<CovarianceLadder> storage;
  const CovarianceLadder& lad = ensure_depth(ladder, e.horizon + 1, storage);
  CompensatedSum sum;
  for (int j = 0; j <= e.horizon; ++j) sum += e.omega[static_cast<std::size_t>(j)] * lad.trace(j);
  const double rest = std::max(0.0, 1.0 - omega_sum(e));
  sum += rest * lad.trace(e.horizon + 1);
  return sum.value();
}

EavesBracket eaves_bracket(const CovarianceLadder& ladder, const EavesStationary& e) {
  const int needed = min_bracket_horizon(e.t_bar);
  if (e.horizon < needed) {
    throw Error(ErrorKind::kHorizon, "horizon N = " + std::to_string(e.horizon) +
                                         " is too small for threshold " + std::to_string(e.t_bar) +
                                         "; minimal admissible N is " + std::to_string(needed));
  }
  EavesBracket out;
  out.horizon = e.horizon;
  out.lower = truncated_lower_bound(ladder, e);
  const double gap = gap_bound(ladder, e, std::max(0.0, 1.0 - omega_sum(e)));
  out.gap = std::isnan(gap) ? std::numeric_limits<double>::infinity() : gap;
  return out;
}

EavesBracket eaves_bracket_at(const CovarianceLadder& ladder, const ChannelModel& channels,
                              int t_bar, int horizon) {
  const int n = std::max(horizon, min_bracket_horizon(t_bar));
  return eaves_bracket(ladder, eaves_stationary(channels, t_bar, n));
}

}  // namespace secest
