#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockisd/pilot.hpp"

namespace blockisd {

struct SolverParams {
  int max_iterations = 2000;
  double penalty = 1.0;          // ADMM penalty, applied after column normalization
  double primal_tol = 1e-8;      // relative primal tolerance
  double dual_tol = 1e-8;        // relative dual tolerance
  double over_relaxation = 1.0;  // 1.0 disables; values in (1, 2) accelerate
};

struct SolverResult {
  Eigen::VectorXcd g_hat;
  double objective = 0.0;          // sum of |g_hat(w)| over the penalized set
  double fidelity_residual = 0.0;  // ||Theta g_hat - y||_2
  int iterations = 0;
  bool converged = false;
};

// One truncated basis-pursuit subproblem:
//   minimize sum_{w in penalized} |g(w)|  subject to  ||Theta g - y||_2 <= delta.
// `penalized` is the set W, i.e. the complement of the detected support.
struct TruncatedBpProblem {
  const SensingMatrix* theta = nullptr;  // block column order
  Measurement y;
  std::vector<int> penalized;
  double fidelity_tolerance = 0.0;
  SolverParams solver_params;
};

// Fidelity tolerance for the noise-aware fit: the expected noise norm
// sqrt(sigma^2 p) widened by 1 + 2/sqrt(p); zero when noiseless.
inline double default_delta(double noise_variance, int n_pilots) {
  if (noise_variance <= 0.0) return 0.0;
  const double pd = static_cast<double>(n_pilots);
  return std::sqrt(noise_variance * pd) * (1.0 + 2.0 / std::sqrt(pd));
}

namespace detail {

// Complex soft threshold: shrinks the magnitude by kappa, keeps the phase.
inline std::complex<double> shrink(const std::complex<double>& v, double kappa) {
  if (kappa <= 0.0) return v;
  const double magnitude = std::abs(v);
  if (magnitude <= kappa) return {0.0, 0.0};
  return v * ((magnitude - kappa) / magnitude);
}

inline void project_ball(Eigen::VectorXcd& v, double radius) {
  const double norm = v.norm();
  if (norm > radius) v *= (radius <= 0.0 ? 0.0 : radius / norm);
}

}  // namespace detail

/**
 * Solves the truncated basis-pursuit problem over the complex field with an
 * ADMM operator-splitting scheme. The stacked variable (x, r) carries the
 * candidate channel and the data residual; the affine constraint A x + r = b
 * is handled by projection through a cached Cholesky factor of A A* + I, and
 * the separable proximal step applies a complex magnitude shrink on the
 * penalized coordinates and a Euclidean ball projection of radius delta on r.
 *
 * Construction cost is one pass over the matrix plus two p x p
 * factorizations, amortized across repeated solves against the same matrix.
 */
class TruncatedBpSolver {
 public:
  explicit TruncatedBpSolver(const SensingMatrix& theta, SolverParams params = {})
      : theta_(&theta), params_(params) {
    const Eigen::MatrixXcd& t = theta.entries;
    if (t.rows() < 1 || t.cols() < 1) throw std::invalid_argument("empty sensing matrix");
    column_norms_ = t.colwise().norm();
    if ((column_norms_.array() <= 0.0).any())
      throw std::invalid_argument("sensing matrix has a zero column");
    normalized_ = t * column_norms_.cwiseInverse().asDiagonal();

    const Eigen::Index p = t.rows();
    gram_llt_.compute(t * t.adjoint());
    if (gram_llt_.info() != Eigen::Success)
      throw std::runtime_error("Theta Theta* is not positive definite (rank-deficient rows)");
    gram_plus_identity_llt_.compute(normalized_ * normalized_.adjoint() +
                                    Eigen::MatrixXcd::Identity(p, p));
    if (gram_plus_identity_llt_.info() != Eigen::Success)
      throw std::runtime_error("normalized Gram factorization failed");
  }

  const SensingMatrix& sensing_matrix() const { return *theta_; }
  const SolverParams& params() const { return params_; }

  // Theta* (Theta Theta*)^{-1} y, pulled back toward zero so the fidelity
  // constraint holds with equality when delta > 0.
  Eigen::VectorXcd min_norm_feasible(const Eigen::VectorXcd& y, double delta) const {
    if (y.size() != theta_->entries.rows()) throw std::invalid_argument("y has the wrong length");
    const double y_norm = y.norm();
    if (y_norm == 0.0) return Eigen::VectorXcd::Zero(theta_->entries.cols());
    Eigen::VectorXcd g = theta_->entries.adjoint() * gram_llt_.solve(y);
    if (delta > 0.0) g *= std::max(0.0, 1.0 - delta / y_norm);
    return g;
  }

  SolverResult solve(const Eigen::VectorXcd& y, const std::vector<int>& penalized, double delta,
                     const Eigen::VectorXcd* warm_start = nullptr) const {
    const Eigen::Index p = normalized_.rows();
    const Eigen::Index n = normalized_.cols();
    if (y.size() != p) throw std::invalid_argument("y has the wrong length");
    if (delta < 0.0) throw std::invalid_argument("fidelity tolerance must be >= 0");
    for (int w : penalized)
      if (w < 0 || w >= n) throw std::invalid_argument("penalized index out of range");

    SolverResult result;
    if (penalized.empty()) {
      // Objective is identically zero; return the minimum-norm feasible point.
      result.g_hat = min_norm_feasible(y, delta);
      result.fidelity_residual = (theta_->entries * result.g_hat - y).norm();
      result.converged = true;
      return result;
    }
    const double scale = y.norm();
    if (scale == 0.0) {
      result.g_hat = Eigen::VectorXcd::Zero(n);
      result.converged = true;
      return result;
    }

    // Work on the column-normalized, unit-norm-data problem: x = D g / scale
    // with D = diag(column norms), b = y / scale. The objective becomes
    // sum w_i |x_i| with w_i = 1 / d_i on the penalized set.
    const Eigen::VectorXcd b = y / scale;
    const double radius = delta / scale;
    const double rho = params_.penalty;
    const double alpha = params_.over_relaxation;
    Eigen::VectorXd threshold = Eigen::VectorXd::Zero(n);
    for (int w : penalized) threshold(w) = 1.0 / (column_norms_(w) * rho);

    Eigen::VectorXcd zx(n), zr(p);
    if (warm_start != nullptr && warm_start->size() == n)
      zx = (warm_start->array() * column_norms_.array().cast<std::complex<double>>()) / scale;
    else
      zx = (min_norm_feasible(y, delta).array() * column_norms_.array().cast<std::complex<double>>()) / scale;
    zr = b - normalized_ * zx;
    detail::project_ball(zr, radius);
    Eigen::VectorXcd ux = Eigen::VectorXcd::Zero(n), ur = Eigen::VectorXcd::Zero(p);
    Eigen::VectorXcd vx(n), vr(p), correction(p), zx_old(n), zr_old(p);

    const double eps_floor = 1e-14 * std::sqrt(static_cast<double>(n + p));
    int iterations = 0;
    bool converged = false;
    while (iterations < params_.max_iterations) {
      ++iterations;
      // Projection onto {A x + r = b} via (A A* + I)^{-1}.
      vx = zx - ux;
      vr = zr - ur;
      correction.noalias() = normalized_ * vx;
      correction += vr;
      correction -= b;
      gram_plus_identity_llt_.solveInPlace(correction);
      vx.noalias() -= normalized_.adjoint() * correction;
      vr -= correction;

      zx_old.swap(zx);
      zr_old.swap(zr);
      if (alpha != 1.0) {
        zx = alpha * vx + (1.0 - alpha) * zx_old + ux;
        zr = alpha * vr + (1.0 - alpha) * zr_old + ur;
      } else {
        zx = vx + ux;
        zr = vr + ur;
      }
      for (Eigen::Index k = 0; k < n; ++k) zx(k) = detail::shrink(zx(k), threshold(k));
      detail::project_ball(zr, radius);
      ux += (alpha != 1.0 ? (alpha * vx + (1.0 - alpha) * zx_old).eval() : vx) - zx;
      ur += (alpha != 1.0 ? (alpha * vr + (1.0 - alpha) * zr_old).eval() : vr) - zr;

      const double primal = std::sqrt((vx - zx).squaredNorm() + (vr - zr).squaredNorm());
      const double dual = rho * std::sqrt((zx - zx_old).squaredNorm() + (zr - zr_old).squaredNorm());
      const double v_norm = std::sqrt(vx.squaredNorm() + vr.squaredNorm());
      const double z_norm = std::sqrt(zx.squaredNorm() + zr.squaredNorm());
      const double u_norm = std::sqrt(ux.squaredNorm() + ur.squaredNorm());
      const double eps_primal = eps_floor + params_.primal_tol * std::max(v_norm, z_norm);
      const double eps_dual = eps_floor + params_.dual_tol * rho * u_norm;
      if (primal <= eps_primal && dual <= eps_dual) {
        converged = true;
        break;
      }
    }

    result.g_hat = scale * (zx.array() / column_norms_.array().cast<std::complex<double>>());
    double objective = 0.0;
    for (int w : penalized) objective += std::abs(result.g_hat(w));
    result.objective = objective;
    result.fidelity_residual = (theta_->entries * result.g_hat - y).norm();
    result.iterations = iterations;
    result.converged = converged;
    return result;
  }

 private:
  const SensingMatrix* theta_;  // not owned; must outlive the solver
  SolverParams params_;
  Eigen::MatrixXcd normalized_;
  Eigen::VectorXd column_norms_;
  Eigen::LLT<Eigen::MatrixXcd> gram_llt_;
  Eigen::LLT<Eigen::MatrixXcd> gram_plus_identity_llt_;
};

inline SolverResult solve_truncated_bp(const TruncatedBpProblem& problem) {
  if (problem.theta == nullptr) throw std::invalid_argument("problem has no sensing matrix");
  TruncatedBpSolver solver(*problem.theta, problem.solver_params);
  return solver.solve(problem.y.y, problem.penalized, problem.fidelity_tolerance);
}

inline Eigen::VectorXcd min_norm_feasible(const SensingMatrix& theta, const Eigen::VectorXcd& y,
                                          double delta) {
  return TruncatedBpSolver(theta).min_norm_feasible(y, delta);
}

}  // namespace blockisd
