#pragma once

#include "secest/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace secest {

enum class SimMode { kIndices, kFullKf };

struct SimConfig {
  std::int64_t horizon = 1'000'000;  // steps averaged per replication
  std::uint64_t seed = 0;
  int replications = 1;
  SimMode mode = SimMode::kIndices;
  int burn_in = 1000;
  int jobs = 1;  // worker threads; never changes the result
};

struct SimResult {
  double avg_trace_legit = 0.0;
  double avg_trace_eaves = 0.0;
  double stderr_legit = 0.0;
  double stderr_eaves = 0.0;
  std::vector<double> hist_legit;  // empirical law of n_k, index 0..max observed
  std::vector<double> hist_eaves;  // empirical law of n_k^e
  std::uint64_t seed_used = 0;

  // Full-KF mode only: time-averaged squared estimation errors.
  bool has_mse = false;
  double mse_legit = 0.0;
  double mse_eaves = 0.0;
  double stderr_mse_legit = 0.0;
  double stderr_mse_eaves = 0.0;
};

/// Uniform and Gaussian draws on top of std::mt19937_64. Each replication
/// owns two engines seeded with seed_seq{seed_lo, seed_hi, replication,
/// purpose}; purpose 0 drives the channels and 1 the plant noise, so the
/// channel realisation is identical in both simulation modes. Uniforms use
/// the top 53 bits; normals use the Box-Muller transform
/// sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2), consuming two uniforms per pair.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose);

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Monte Carlo of the holding-index pair (n_k, n_k^e) under threshold
/// t_bar, accumulating tr f^n(P_bar). Starts from (0, 0) and discards
/// `burn_in` steps.
SimResult simulate_indices(const SimConfig& config, const ChannelModel& channels, int t_bar,
                           const CovarianceLadder& ladder);

/// Simulates the plant, a steady-state local Kalman filter and both remote
/// estimators. Reports the same index-based traces as simulate_indices
/// (bit-identical for the same seed) plus empirical squared errors.
SimResult simulate_full_kf(const SimConfig& config, const SystemModel& model,
                           const ChannelModel& channels, int t_bar);

/// Total-variation distance between two probability vectors (missing
/// entries count as zero). `tail_b` is extra mass of b not listed.
double total_variation(const std::vector<double>& a, const std::vector<double>& b,
                       double tail_b = 0.0);

}  // namespace secest
