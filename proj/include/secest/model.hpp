#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace secest {

using Matrix = Eigen::MatrixXd;

/// Linear time-invariant plant x+ = A x + w, y = C x + v with w ~ N(0, Q),
/// v ~ N(0, R).
struct SystemModel {
  Matrix A;
  Matrix C;
  Matrix Q;
  Matrix R;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
};

/// Bernoulli reception rates. `lambda_v` is the delivery rate of the
/// scheduling command; a lost command suppresses the transmission, so it
/// gates both receivers in the same step.
struct ChannelModel {
  double lambda = 1.0;
  double lambda_e = 0.0;
  double lambda_v = 1.0;

  bool operator==(const ChannelModel&) const = default;
};

/// Per-transmission-slot outcome probabilities for the (legitimate,
/// eavesdropper) pair. `neither` includes the mass of a lost command.
struct JointReception {
  double both = 0.0;
  double legit_only = 0.0;
  double eaves_only = 0.0;
  double neither = 1.0;

  double legit() const { return both + legit_only; }
  double eaves() const { return both + eaves_only; }
};

JointReception joint_reception(const ChannelModel& channels);

/// Throws Error(kValidation / kDimension) if the model is malformed, Q is not
/// PSD, R is not PD or rho(A) > 1 + 1e-9.
void validate(const SystemModel& model);
void validate(const ChannelModel& channels);

/// max |eig(M)|.
double spectral_radius(const Matrix& m);

inline constexpr double kMarginalTol = 1e-9;

/// |rho - 1| <= 1e-9 is treated as marginally stable.
inline bool is_marginal(double rho) { return rho >= 1.0 - kMarginalTol; }

/// One prediction/update cycle of the Kalman covariance recursion.
Matrix riccati_step(const Matrix& p, const SystemModel& model);

/// Fixed point of riccati_step, iterated from Q until the relative change
/// drops below 1e-12. Non-convergence within 10^6 steps raises kConvergence,
/// which in practice means (A, C) is not detectable.
Matrix steady_state_covariance(const SystemModel& model);

/// Open-loop covariance propagation f(X) = A X A' + Q, symmetrized.
Matrix f_map(const Matrix& x, const SystemModel& model);

/// Fixed point of f for rho(A) < 1, i.e. the solution of X = A X A' + Q.
/// Uses the squared-iterate form X <- X + A_k X A_k', A_k <- A_k^2.
Matrix lyapunov_limit(const SystemModel& model);

/// PBH rank tests, tolerance relative to the largest singular value.
bool is_detectable(const Matrix& a, const Matrix& c, double rel_tol = 1e-8);
bool is_stabilizable(const Matrix& a, const Matrix& q, double rel_tol = 1e-8);

/// Affine upper envelope tr f^j(P_bar) <= offset + slope * j valid for every
/// j >= 0. For rho(A) < 1 it is the Lyapunov limit trace (slope 0). For
/// rho(A) = 1 it is c^2 n (rho(P_bar) + rho(Q) j) with c = sup_k ||A^k||_2;
/// if A is not power bounded the envelope is unbounded.
struct TraceEnvelope {
  bool bounded = false;
  double offset = 0.0;
  double slope = 0.0;

  double at(double j) const { return offset + slope * j; }
};

/// tr f^j(P_bar) for j = 0..depth, plus the data needed to extend it.
class CovarianceLadder {
 public:
  const SystemModel& model() const { return model_; }
  const Matrix& p_bar() const { return p_bar_; }
  int depth() const { return static_cast<int>(traces_.size()) - 1; }
  double trace(int j) const { return traces_.at(static_cast<std::size_t>(j)); }
  std::span<const double> traces() const { return traces_; }

  double rho_a() const { return rho_a_; }
  double rho_p_bar() const { return rho_p_bar_; }
  double rho_q() const { return rho_q_; }
  bool marginal() const { return is_marginal(rho_a_); }

  /// Trace of the Lyapunov fixed point; empty when rho(A) = 1 (infinite).
  std::optional<double> limit_trace() const { return limit_trace_; }
  const TraceEnvelope& envelope() const { return envelope_; }

  /// Copy extended to at least `depth` (no-op copy if already deep enough).
  CovarianceLadder extended(int depth) const;

  friend CovarianceLadder build_ladder(const SystemModel& model, int depth);

 private:
  void grow(int depth);

  SystemModel model_;
  Matrix p_bar_;
  Matrix last_;
  std::vector<double> traces_;
  double rho_a_ = 0.0;
  double rho_p_bar_ = 0.0;
  double rho_q_ = 0.0;
  std::optional<double> limit_trace_;
  TraceEnvelope envelope_;
};

/// Validates the model, solves for P_bar and precomputes traces to `depth`.
CovarianceLadder build_ladder(const SystemModel& model, int depth);

/// Returns `ladder` if it already reaches `depth`, else an extended copy held
/// in `storage`.
const CovarianceLadder& ensure_depth(const CovarianceLadder& ladder, int depth,
                                     std::optional<CovarianceLadder>& storage);

}  // namespace secest
