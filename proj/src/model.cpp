#include "secest/model.hpp"

#include "secest/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace secest {
namespace {

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Matrix symmetrized(const Matrix& y) { return 0.5 * (y + y.transpose()); }

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::kValidation, std::string(name) + " has non-finite entries");
  }
}

void require_symmetric(const Matrix& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::kValidation, std::string(name) + " is not symmetric");
  }
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double relative_change(const Matrix& next, const Matrix& prev) {
  const double denom = next.norm();
  const double diff = (next - prev).norm();
  return denom > 0.0 ? diff / denom : diff;
}

// sup_k ||A^k||_2^2 over a finite window; +inf if the norms are still growing
// in the second half of the window (A not power bounded).
double power_bound_squared(const Matrix& a) {
  constexpr int kWindow = 4096;
  const int n = static_cast<int>(a.rows());
  Matrix power = Matrix::Identity(n, n);
  double first_half = 1.0;
  double second_half = 0.0;
  for (int k = 1; k <= kWindow; ++k) {
    power = power * a;
    const double norm = power.operatorNorm();
    if (!std::isfinite(norm)) return std::numeric_limits<double>::infinity();
    if (k <= kWindow / 2) {
      first_half = std::max(first_half, norm);
    } else {
      second_half = std::max(second_half, norm);
    }
  }
  if (second_half > first_half * (1.0 + 1e-6)) {
    return std::numeric_limits<double>::infinity();
  }
  return first_half * first_half;
}

}  // namespace

JointReception joint_reception(const ChannelModel& ch) {
  JointReception j;
  j.both = ch.lambda_v * ch.lambda * ch.lambda_e;
  j.legit_only = ch.lambda_v * ch.lambda * (1.0 - ch.lambda_e);
  j.eaves_only = ch.lambda_v * (1.0 - ch.lambda) * ch.lambda_e;
  j.neither = 1.0 - j.both - j.legit_only - j.eaves_only;
  return j;
}

void validate(const ChannelModel& ch) {
  auto in_unit = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!in_unit(ch.lambda) || !in_unit(ch.lambda_e) || !in_unit(ch.lambda_v)) {
    throw Error(ErrorKind::kValidation, "channel rates must lie in [0, 1]");
  }
  if (ch.lambda * ch.lambda_v <= 0.0) {
    throw Error(ErrorKind::kDegenerateChannel,
                "lambda * lambda_v must be positive: no transmission can ever succeed");
  }
}

void validate(const SystemModel& m) {
  const auto n = m.A.rows();
  if (n == 0 || m.A.cols() != n) {
    throw Error(ErrorKind::kDimension, "A must be square and non-empty, got " + dims(m.A));
  }
  if (m.C.cols() != n || m.C.rows() == 0) {
    throw Error(ErrorKind::kDimension, "C must be n_y x " + std::to_string(n) + ", got " + dims(m.C));
  }
  if (m.Q.rows() != n || m.Q.cols() != n) {
    throw Error(ErrorKind::kDimension, "Q must be " + dims(m.A) + ", got " + dims(m.Q));
  }
  const auto ny = m.C.rows();
  if (m.R.rows() != ny || m.R.cols() != ny) {
    throw Error(ErrorKind::kDimension,
                "R must be " + std::to_string(ny) + "x" + std::to_string(ny) + ", got " + dims(m.R));
  }
  require_finite(m.A, "A");
  require_finite(m.C, "C");
  require_finite(m.Q, "Q");
  require_finite(m.R, "R");
  require_symmetric(m.Q, "Q");
  require_symmetric(m.R, "R");

  const double q_scale = std::max(1.0, m.Q.cwiseAbs().maxCoeff());
  if (min_eigenvalue(m.Q) < -1e-12 * q_scale) {
    throw Error(ErrorKind::kValidation, "Q is not positive semi-definite");
  }
  if (min_eigenvalue(m.R) <= 0.0) {
    throw Error(ErrorKind::kValidation, "R is not positive definite");
  }
  const double rho = spectral_radius(m.A);
  if (rho > 1.0 + kMarginalTol) {
    std::ostringstream os;
    os.precision(12);
    os << "spectral radius of A is " << rho << " > 1: only stable or marginally stable plants are supported";
    throw Error(ErrorKind::kValidation, os.str());
  }
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kDimension, "spectral_radius needs a square matrix, got " + dims(m));
  }
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) throw Error(ErrorKind::kValidation, "matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigenvalue solver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix riccati_step(const Matrix& p, const SystemModel& m) {
  const Matrix prior = m.A * p * m.A.transpose() + m.Q;
  const Matrix innovation = m.C * prior * m.C.transpose() + m.R;
  // K' = S^{-1} C P_prior since S and P_prior are symmetric.
  const Matrix gain_t = innovation.ldlt().solve(m.C * prior);
  const auto n = p.rows();
  const Matrix post = (Matrix::Identity(n, n) - gain_t.transpose() * m.C) * prior;
  return symmetrized(post);
}

Matrix steady_state_covariance(const SystemModel& m) {
  constexpr int kMaxIter = 1'000'000;
  Matrix p = m.Q;
  for (int it = 0; it < kMaxIter; ++it) {
    Matrix next = riccati_step(p, m);
    if (!next.allFinite()) break;
    if (relative_change(next, p) < 1e-12) return next;
    p = std::move(next);
  }
  throw Error(ErrorKind::kConvergence,
              "Riccati iteration did not converge: check that (A, C) is detectable");
}

Matrix f_map(const Matrix& x, const SystemModel& m) {
  if (x.rows() != m.A.rows() || x.cols() != m.A.rows()) {
    throw Error(ErrorKind::kDimension, "f_map expects " + dims(m.A) + ", got " + dims(x));
  }
  return symmetrized(m.A * x * m.A.transpose() + m.Q);
}

Matrix lyapunov_limit(const SystemModel& m) {
  if (is_marginal(spectral_radius(m.A))) {
    throw Error(ErrorKind::kNumerical, "Lyapunov limit is infinite for rho(A) = 1");
  }
  Matrix x = m.Q;
  Matrix a = m.A;
  for (int it = 0; it < 200; ++it) {
    const Matrix dx = a * x * a.transpose();
    x += dx;
    x = symmetrized(x);
    const double denom = x.norm();
    if (dx.norm() <= 1e-12 * (denom > 0.0 ? denom : 1.0)) return x;
    a = a * a;
  }
  throw Error(ErrorKind::kConvergence, "Lyapunov iteration did not converge");
}

namespace {

bool pbh_full_rank(const Matrix& a, const Matrix& b, bool transpose_stack, double rel_tol) {
  Eigen::EigenSolver<Matrix> es(a, false);
  const auto n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> mu = es.eigenvalues()(i);
    if (std::abs(mu) < 1.0) continue;
    Eigen::MatrixXcd stacked;
    const Eigen::MatrixXcd shifted =
        a.cast<std::complex<double>>() - mu * Eigen::MatrixXcd::Identity(n, n);
    if (transpose_stack) {
      stacked.resize(n + b.rows(), n);
      stacked << shifted, b.cast<std::complex<double>>();
    } else {
      stacked.resize(n, n + b.cols());
      stacked << shifted, b.cast<std::complex<double>>();
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const auto& sv = svd.singularValues();
    const double tol = rel_tol * std::max(sv(0), 1e-300);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) rank += sv(k) > tol ? 1 : 0;
    if (rank < n) return false;
  }
  return true;
}

}  // namespace

bool is_detectable(const Matrix& a, const Matrix& c, double rel_tol) {
  return pbh_full_rank(a, c, true, rel_tol);
}

bool is_stabilizable(const Matrix& a, const Matrix& q, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(q));
  const Matrix root = es.operatorSqrt();
  return pbh_full_rank(a, root, false, rel_tol);
}

void CovarianceLadder::grow(int depth) {
  traces_.reserve(static_cast<std::size_t>(depth) + 1);
  while (this->depth() < depth) {
    last_ = f_map(last_, model_);
    traces_.push_back(last_.trace());
  }
}

CovarianceLadder CovarianceLadder::extended(int depth) const {
  CovarianceLadder copy = *this;
  copy.grow(depth);
  return copy;
}

CovarianceLadder build_ladder(const SystemModel& model, int depth) {
  if (depth < 1) throw Error(ErrorKind::kValidation, "ladder depth must be >= 1");
  validate(model);
  CovarianceLadder ladder;
  ladder.model_ = model;
  ladder.p_bar_ = steady_state_covariance(model);
  ladder.last_ = ladder.p_bar_;
  ladder.traces_.push_back(ladder.p_bar_.trace());
  ladder.rho_a_ = spectral_radius(model.A);
  ladder.rho_p_bar_ = std::max(0.0, max_eigenvalue(ladder.p_bar_));
  ladder.rho_q_ = std::max(0.0, max_eigenvalue(model.Q));

  const double n = static_cast<double>(model.state_dim());
  if (!is_marginal(ladder.rho_a_)) {
    const double limit = lyapunov_limit(model).trace();
    ladder.limit_trace_ = limit;
    ladder.envelope_ = TraceEnvelope{true, limit, 0.0};
  } else {
    const double c2 = power_bound_squared(model.A);
    if (std::isfinite(c2)) {
      ladder.envelope_ = TraceEnvelope{true, c2 * n * ladder.rho_p_bar_, c2 * n * ladder.rho_q_};
    } else {
      ladder.envelope_ = TraceEnvelope{false, std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity()};
    }
  }
  ladder.grow(depth);
  return ladder;
}

const CovarianceLadder& ensure_depth(const CovarianceLadder& ladder, int depth,
                                     std::optional<CovarianceLadder>& storage) {
  if (ladder.depth() >= depth) return ladder;
  storage.emplace(ladder.extended(std::max(depth, 2 * ladder.depth())));
  return *storage;
}

}  // namespace secest
