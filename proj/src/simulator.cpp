#include "secest/simulator.hpp"

#include "secest/error.hpp"
#include "secest/kahan.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>

namespace secest {

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(purpose)};
  engine_.seed(seq);
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log1p(-u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

namespace {

constexpr int kBatches = 32;

void validate_config(const SimConfig& c) {
  if (c.horizon < 1) throw Error(ErrorKind::kValidation, "simulation horizon must be >= 1");
  if (c.replications < 1) throw Error(ErrorKind::kValidation, "replications must be >= 1");
  if (c.burn_in < 0) throw Error(ErrorKind::kValidation, "burn-in must be >= 0");
}

// Holding-index pair under the threshold policy. One scheduled slot consumes
// exactly three uniforms (command, legitimate, eavesdropper).
struct IndexProcess {
  int t_bar;
  ChannelModel ch;
  int i = 0;
  int j = 0;

  struct Outcome {
    bool legit;
    bool eaves;
  };

  Outcome step(RandomStream& rng) {
    Outcome o{false, false};
    if (i >= t_bar) {
      const bool command = rng.uniform() < ch.lambda_v;
      const double ul = rng.uniform();
      const double ue = rng.uniform();
      o.legit = command && ul < ch.lambda;
      o.eaves = command && ue < ch.lambda_e;
    }
    i = o.legit ? 0 : i + 1;
    j = o.eaves ? 0 : j + 1;
    return o;
  }
};

class BatchAccumulator {
 public:
  explicit BatchAccumulator(std::int64_t horizon)
      : horizon_(horizon), batches_(static_cast<int>(std::min<std::int64_t>(kBatches, horizon))) {
    sums_.assign(static_cast<std::size_t>(batches_), CompensatedSum{});
    counts_.assign(static_cast<std::size_t>(batches_), 0);
  }

  void add(std::int64_t step, double x) {
    const auto b = static_cast<std::size_t>(
        std::min<std::int64_t>(step * batches_ / horizon_, batches_ - 1));
    sums_[b] += x;
    ++counts_[b];
  }

  void append_means(std::vector<double>& means, std::vector<std::int64_t>& counts) const {
    for (std::size_t b = 0; b < sums_.size(); ++b) {
      means.push_back(sums_[b].value() / static_cast<double>(counts_[b]));
      counts.push_back(counts_[b]);
    }
  }

 private:
  std::int64_t horizon_;
  int batches_;
  std::vector<CompensatedSum> sums_;
  std::vector<std::int64_t> counts_;
};

struct Replication {
  std::vector<double> batch_legit, batch_eaves, batch_mse_legit, batch_mse_eaves;
  std::vector<std::int64_t> batch_counts;
  std::vector<std::int64_t> hist_legit, hist_eaves;
};

void bump(std::vector<std::int64_t>& hist, int index) {
  const auto k = static_cast<std::size_t>(index);
  if (k >= hist.size()) hist.resize(k + 1, 0);
  ++hist[k];
}

struct TraceLookup {
  const CovarianceLadder* ladder;
  std::optional<CovarianceLadder> storage;

  double operator()(int n) {
    if (n > ladder->depth()) ladder = &ensure_depth(*ladder, n, storage);
    return ladder->trace(n);
  }
};

Replication run_indices(const SimConfig& cfg, const ChannelModel& ch, int t_bar,
                        const CovarianceLadder& ladder, std::uint64_t rep) {
  RandomStream rng(cfg.seed, rep, 0);
  IndexProcess proc{t_bar, ch};
  TraceLookup tr{&ladder, std::nullopt};
  BatchAccumulator legit(cfg.horizon), eaves(cfg.horizon);
  Replication out;
  for (int k = 0; k < cfg.burn_in; ++k) proc.step(rng);
  for (std::int64_t k = 0; k < cfg.horizon; ++k) {
    proc.step(rng);
    legit.add(k, tr(proc.i));
    eaves.add(k, tr(proc.j));
    bump(out.hist_legit, proc.i);
    bump(out.hist_eaves, proc.j);
  }
  std::vector<std::int64_t> ignored;
  legit.append_means(out.batch_legit, out.batch_counts);
  eaves.append_means(out.batch_eaves, ignored);
  return out;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Replication run_full_kf(const SimConfig& cfg, const SystemModel& model, const ChannelModel& ch,
                        int t_bar, const CovarianceLadder& ladder, std::uint64_t rep) {
  RandomStream channel_rng(cfg.seed, rep, 0);
  RandomStream noise_rng(cfg.seed, rep, 1);
  IndexProcess proc{t_bar, ch};
  TraceLookup tr{&ladder, std::nullopt};

  const int n = model.state_dim();
  const int ny = model.output_dim();
  const Matrix prior = model.A * ladder.p_bar() * model.A.transpose() + model.Q;
  const Matrix innovation = model.C * prior * model.C.transpose() + model.R;
  const Matrix gain = innovation.ldlt().solve(model.C * prior).transpose();
  const Matrix q_root = psd_sqrt(model.Q);
  const Matrix r_root = psd_sqrt(model.R);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd local = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd remote = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd spy = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd predicted(n), tmp(n), z(n), zy(ny), y(ny), err(n);

  BatchAccumulator legit(cfg.horizon), eaves(cfg.horizon), mse_l(cfg.horizon), mse_e(cfg.horizon);
  Replication out;

  const std::int64_t total = cfg.burn_in + cfg.horizon;
  for (std::int64_t k = 0; k < total; ++k) {
    if (k > 0) {
      for (int r = 0; r < n; ++r) z(r) = noise_rng.normal();
      tmp.noalias() = model.A * x;
      tmp.noalias() += q_root * z;
      x = tmp;
    }
    for (int r = 0; r < ny; ++r) zy(r) = noise_rng.normal();
    y.noalias() = model.C * x;
    y.noalias() += r_root * zy;

    predicted.noalias() = model.A * local;
    local = predicted;
    zy.noalias() = y - model.C * predicted;
    local.noalias() += gain * zy;

    const auto outcome = proc.step(channel_rng);
    if (outcome.legit) {
      remote = local;
    } else {
      tmp.noalias() = model.A * remote;
      remote = tmp;
    }
    if (outcome.eaves) {
      spy = local;
    } else {
      tmp.noalias() = model.A * spy;
      spy = tmp;
    }

    if (k < cfg.burn_in) continue;
    const std::int64_t s = k - cfg.burn_in;
    legit.add(s, tr(proc.i));
    eaves.add(s, tr(proc.j));
    err = x - remote;
    mse_l.add(s, err.squaredNorm());
    err = x - spy;
    mse_e.add(s, err.squaredNorm());
    bump(out.hist_legit, proc.i);
    bump(out.hist_eaves, proc.j);
  }
  std::vector<std::int64_t> ignored;
  legit.append_means(out.batch_legit, out.batch_counts);
  eaves.append_means(out.batch_eaves, ignored);
  mse_l.append_means(out.batch_mse_legit, ignored);
  mse_e.append_means(out.batch_mse_eaves, ignored);
  return out;
}

template <typename Fn>
std::vector<Replication> run_replications(const SimConfig& cfg, Fn&& fn) {
  std::vector<Replication> reps(static_cast<std::size_t>(cfg.replications));
  const int workers = std::clamp(cfg.jobs, 1, cfg.replications);
  if (workers == 1) {
    for (int r = 0; r < cfg.replications; ++r) reps[static_cast<std::size_t>(r)] = fn(r);
    return reps;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int r = w; r < cfg.replications; r += workers) reps[static_cast<std::size_t>(r)] = fn(r);
    });
  }
  pool.clear();
  return reps;
}

struct MeanAndError {
  double mean;
  double stderr_;
};

// Weighted mean of batch means and the standard error of that mean from
// their spread; replications are reduced in index order.
MeanAndError combine(const std::vector<Replication>& reps,
                     std::vector<double> Replication::*field) {
  CompensatedSum weighted;
  std::int64_t total = 0;
  std::size_t batches = 0;
  for (const auto& r : reps) {
    const auto& means = r.*field;
    for (std::size_t b = 0; b < means.size(); ++b) {
      weighted += means[b] * static_cast<double>(r.batch_counts[b]);
      total += r.batch_counts[b];
    }
    batches += means.size();
  }
  const double mean = weighted.value() / static_cast<double>(total);
  if (batches < 2) return {mean, 0.0};
  CompensatedSum sq;
  for (const auto& r : reps) {
    for (double m : r.*field) sq += (m - mean) * (m - mean);
  }
  const double var = sq.value() / static_cast<double>(batches - 1);
  return {mean, std::sqrt(var / static_cast<double>(batches))};
}

std::vector<double> normalized_histogram(const std::vector<Replication>& reps,
                                         std::vector<std::int64_t> Replication::*field) {
  std::vector<std::int64_t> counts;
  for (const auto& r : reps) {
    const auto& h = r.*field;
    if (h.size() > counts.size()) counts.resize(h.size(), 0);
    for (std::size_t k = 0; k < h.size(); ++k) counts[k] += h[k];
  }
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  }
  return out;
}

SimResult assemble(const SimConfig& cfg, const std::vector<Replication>& reps, bool with_mse) {
  SimResult res;
  res.seed_used = cfg.seed;
  const auto legit = combine(reps, &Replication::batch_legit);
  const auto eaves = combine(reps, &Replication::batch_eaves);
  res.avg_trace_legit = legit.mean;
  res.stderr_legit = legit.stderr_;
  res.avg_trace_eaves = eaves.mean;
  res.stderr_eaves = eaves.stderr_;
  res.hist_legit = normalized_histogram(reps, &Replication::hist_legit);
  res.hist_eaves = normalized_histogram(reps, &Replication::hist_eaves);
  if (with_mse) {
    const auto ml = combine(reps, &Replication::batch_mse_legit);
    const auto me = combine(reps, &Replication::batch_mse_eaves);
    res.has_mse = true;
    res.mse_legit = ml.mean;
    res.stderr_mse_legit = ml.stderr_;
    res.mse_eaves = me.mean;
    res.stderr_mse_eaves = me.stderr_;
  }
  return res;
}

}  // namespace

SimResult simulate_indices(const SimConfig& config, const ChannelModel& channels, int t_bar,
                           const CovarianceLadder& ladder) {
  validate_config(config);
  validate(channels);
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  const CovarianceLadder deep = ladder.extended(std::max(ladder.depth(), 1024));
  auto reps = run_replications(config, [&](int r) {
    return run_indices(config, channels, t_bar, deep, static_cast<std::uint64_t>(r));
  });
  return assemble(config, reps, false);
}

SimResult simulate_full_kf(const SimConfig& config, const SystemModel& model,
                           const ChannelModel& channels, int t_bar) {
  validate_config(config);
  validate(channels);
  if (t_bar < 0) throw Error(ErrorKind::kValidation, "threshold must be non-negative");
  const CovarianceLadder ladder = build_ladder(model, 1024);
  auto reps = run_replications(config, [&](int r) {
    return run_full_kf(config, model, channels, t_bar, ladder, static_cast<std::uint64_t>(r));
  });
  return assemble(config, reps, true);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b, double tail_b) {
  const std::size_t n = std::max(a.size(), b.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = k < a.size() ? a[k] : 0.0;
    const double y = k < b.size() ? b[k] : 0.0;
    s += std::abs(x - y);
  }
  s += tail_b;
  return 0.5 * s.value();
}

}  // namespace secest
