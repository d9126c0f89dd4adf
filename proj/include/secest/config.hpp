#pragma once

#include "secest/model.hpp"
#include "secest/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace secest {

using NestedRows = std::vector<std::vector<double>>;

struct ModelBlock {
  NestedRows A, C, Q, R;
  bool operator==(const ModelBlock&) const = default;
};

struct SolverBlock {
  int N = 300;
  std::optional<double> tol;  // objective truncation; empty = relative 1e-9
  std::optional<int> t_bar;
  std::optional<double> b_lower;
  int M_oracle = 150;
  std::vector<int> oracle_thresholds{0, 1, 3};
  bool operator==(const SolverBlock&) const = default;
};

struct SimBlock {
  std::int64_t horizon = 1'000'000;
  std::uint64_t seed = 1;
  int replications = 1;
  SimMode mode = SimMode::kIndices;
  int burn_in = 1000;
  bool operator==(const SimBlock&) const = default;
};

struct SweepBlock {
  std::vector<double> b_lower;
  std::vector<int> N;
  bool simulate = true;
  bool operator==(const SweepBlock&) const = default;
};

struct OutputBlock {
  std::string dir = "out";
  bool svg = false;
  bool operator==(const OutputBlock&) const = default;
};

/// Everything a CLI run needs, parsed from one JSON document:
///
///   { "model":    { "A": [[..]], "C": [[..]], "Q": [[..]], "R": [[..]] },
///     "channels": { "lambda": 0.3, "lambda_e": 0.3, "lambda_v": 1 },
///     "solver":   { "N": 300, "tol": 1e-9, "t_bar": 5, "b_lower": 20,
///                   "M_oracle": 150, "oracle_thresholds": [0, 1, 3] },
///     "sim":      { "horizon": 1000000, "seed": 1, "replications": 1,
///                   "mode": "indices" | "full_kf", "burn_in": 1000 },
///     "sweep":    { "b_lower": [5, 10], "N": [35, 45], "simulate": true },
///     "output":   { "dir": "out", "svg": false } }
///
/// "model" and "channels" are required; other blocks fall back to defaults.
struct RunConfig {
  ModelBlock model;
  ChannelModel channels;
  SolverBlock solver;
  SimBlock sim;
  SweepBlock sweep;
  OutputBlock output;

  bool operator==(const RunConfig&) const = default;
};

/// Throws Error(kConfig) with the offending field and, where it can be
/// located, the line in `text`. The model and channels are validated too.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON with every field spelled out; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);

SystemModel to_system_model(const ModelBlock& block);

/// The plant and channel rates used in the simulation study of the method:
/// A = [[0.95, 0.85], [0, 0.99]], C = [1 1], R = 0.01,
/// Q = [[0.0425, 0.02], [0.02, 0.0425]], lambda = lambda_e = 0.3.
RunConfig reference_config();

}  // namespace secest
