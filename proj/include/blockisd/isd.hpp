#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "blockisd/solver.hpp"

namespace blockisd {

enum class TerminationReason {
  support_cap,     // detected support reached the size guard N_T*L - p
  support_stable,  // support repeated; the next subproblem would be identical
  no_jump_found,   // no gap in the sorted magnitudes exceeded the threshold
  iteration_cap,   // hit the configured iteration limit
  single_shot,     // one-pass method, no support iteration
  oracle,          // genie-aided least squares
};

inline const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::support_cap: return "support_cap";
    case TerminationReason::support_stable: return "support_stable";
    case TerminationReason::no_jump_found: return "no_jump_found";
    case TerminationReason::iteration_cap: return "iteration_cap";
    case TerminationReason::single_shot: return "single_shot";
    case TerminationReason::oracle: return "oracle";
  }
  return "unknown";
}

// Knobs for the support-detection loop. Deliberately no sparsity-level input:
// the methods find the support size on their own.
struct IsdParams {
  SolverParams solver;
  int iteration_cap = 12;
  double delta_scale = 1.0;  // multiplies the fidelity tolerance of every solve
  bool warm_start = true;    // start each solve from the previous estimate
  bool record_trace = false;
};

struct IsdIterate {
  int iteration = 0;
  double jump_gap_threshold = 0.0;   // tau
  double magnitude_threshold = 0.0;  // epsilon; NaN when no jump was found
  std::vector<int> scalar_support;
  std::vector<int> support;  // after the vote, when voting is on
  double objective = 0.0;
  double fidelity_residual = 0.0;
  int solver_iterations = 0;
};

struct RecoveryOutput {
  Eigen::VectorXcd g_hat;
  std::vector<int> final_support;  // ascending
  int iterations_used = 0;
  TerminationReason termination_reason = TerminationReason::single_shot;
  bool solver_converged = true;  // false if any inner solve ran out of iterations
  std::vector<IsdIterate> trace;
};

// tau = ||v||_inf / (L * N_T)
inline double jump_threshold(const Eigen::VectorXcd& v, int channel_length, int n_antennas) {
  if (v.size() == 0) throw std::invalid_argument("jump threshold of an empty vector");
  return v.cwiseAbs().maxCoeff() /
         (static_cast<double>(channel_length) * static_cast<double>(n_antennas));
}

// First index i with sorted[i + 1] - sorted[i] > tau; scans from the smallest
// magnitude upward. Absence (a flat magnitude profile) is a valid outcome.
inline std::optional<int> first_significant_jump(const std::vector<double>& sorted_magnitudes,
                                                 double tau) {
  for (std::size_t i = 0; i + 1 < sorted_magnitudes.size(); ++i)
    if (sorted_magnitudes[i + 1] - sorted_magnitudes[i] > tau) return static_cast<int>(i);
  return std::nullopt;
}

// All positions of g whose magnitude strictly exceeds epsilon, ascending.
inline std::vector<int> detect_support(const Eigen::VectorXcd& g, double epsilon) {
  std::vector<int> support;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (std::abs(g(k)) > epsilon) support.push_back(static_cast<int>(k));
  return support;
}

// A block survives only when strictly more than half of its indexes were
// detected; surviving blocks enter whole, the rest contribute nothing.
inline std::vector<int> block_vote(const std::vector<int>& scalar_support, int n_antennas,
                                   int channel_length) {
  std::vector<int> votes(channel_length, 0);
  for (int k : scalar_support) {
    if (k < 0 || k >= n_antennas * channel_length)
      throw std::invalid_argument("support index out of range");
    ++votes[k / n_antennas];
  }
  std::vector<int> support;
  for (int l = 0; l < channel_length; ++l)
    if (2 * votes[l] > n_antennas)
      for (int t = 0; t < n_antennas; ++t) support.push_back(l * n_antennas + t);
  return support;
}

namespace detail {

inline std::vector<int> complement_of(const std::vector<int>& sorted_support, int n) {
  std::vector<int> complement;
  complement.reserve(static_cast<std::size_t>(n) - sorted_support.size());
  std::size_t j = 0;
  for (int k = 0; k < n; ++k) {
    if (j < sorted_support.size() && sorted_support[j] == k)
      ++j;
    else
      complement.push_back(k);
  }
  return complement;
}

// Ascending magnitudes with stable ties (equal magnitudes keep index order).
inline std::vector<double> sorted_magnitudes(const Eigen::VectorXcd& v) {
  std::vector<double> magnitudes(static_cast<std::size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) magnitudes[static_cast<std::size_t>(k)] = std::abs(v(k));
  std::stable_sort(magnitudes.begin(), magnitudes.end());
  return magnitudes;
}

inline RecoveryOutput run_support_detection(const TruncatedBpSolver& solver,
                                            const Eigen::VectorXcd& y, double delta,
                                            const IsdParams& params, bool block_voting) {
  const SensingMatrix& theta = solver.sensing_matrix();
  const int n = static_cast<int>(theta.entries.cols());
  const int p = static_cast<int>(theta.entries.rows());
  const double tolerance = params.delta_scale * delta;
  if (tolerance < 0.0) throw std::invalid_argument("fidelity tolerance must be >= 0");
  if (params.iteration_cap < 1) throw std::invalid_argument("iteration cap must be >= 1");

  RecoveryOutput out;
  std::vector<int> support;  // Gamma, recomputed from scratch every iteration
  Eigen::VectorXcd estimate;
  bool have_estimate = false;
  int s = 0;
  out.termination_reason = TerminationReason::support_cap;

  while (static_cast<int>(support.size()) < n - p) {
    if (s >= params.iteration_cap) {
      out.termination_reason = TerminationReason::iteration_cap;
      break;
    }
    const std::vector<int> penalized = complement_of(support, n);
    SolverResult solved = solver.solve(y, penalized, tolerance,
                                       (params.warm_start && have_estimate) ? &estimate : nullptr);
    estimate = std::move(solved.g_hat);
    have_estimate = true;
    out.solver_converged = out.solver_converged && solved.converged;
    ++s;

    const std::vector<double> magnitudes = sorted_magnitudes(estimate);
    const double tau = jump_threshold(estimate, theta.length_per_antenna, theta.n_antennas);
    const std::optional<int> jump = first_significant_jump(magnitudes, tau);

    IsdIterate step;
    if (params.record_trace) {
      step.iteration = s;
      step.jump_gap_threshold = tau;
      step.objective = solved.objective;
      step.fidelity_residual = solved.fidelity_residual;
      step.solver_iterations = solved.iterations;
    }
    if (!jump.has_value()) {
      out.termination_reason = TerminationReason::no_jump_found;
      if (params.record_trace) {
        step.magnitude_threshold = std::nan("");
        step.support = support;
        out.trace.push_back(std::move(step));
      }
      break;
    }
    const double epsilon = magnitudes[static_cast<std::size_t>(*jump)];
    std::vector<int> scalar = detect_support(estimate, epsilon);
    if (params.record_trace) step.scalar_support = scalar;
    std::vector<int> next =
        block_voting ? block_vote(scalar, theta.n_antennas, theta.length_per_antenna)
                     : std::move(scalar);
    if (params.record_trace) {
      step.magnitude_threshold = epsilon;
      step.support = next;
      out.trace.push_back(std::move(step));
    }
    if (next == support) {
      out.termination_reason = TerminationReason::support_stable;
      break;
    }
    support = std::move(next);
  }

  out.g_hat = have_estimate ? std::move(estimate) : solver.min_norm_feasible(y, tolerance);
  out.final_support = std::move(support);
  out.iterations_used = s;
  return out;
}

}  // namespace detail

/**
 * Block-sparse recovery by iterative support detection: alternate a truncated
 * basis-pursuit solve with magnitude-threshold support detection, promoting
 * detected indexes block-wise through a majority vote. The support is found
 * by the first-significant-jump rule, so no sparsity level is supplied.
 */
inline RecoveryOutput block_isd_recover(const TruncatedBpSolver& solver,
                                        const Eigen::VectorXcd& y, double delta,
                                        const IsdParams& params = {}) {
  return detail::run_support_detection(solver, y, delta, params, true);
}

inline RecoveryOutput block_isd_recover(const SensingMatrix& theta, const Measurement& y,
                                        const IsdParams& params = {}) {
  TruncatedBpSolver solver(theta, params.solver);
  return block_isd_recover(solver, y.y, default_delta(y.noise_variance, static_cast<int>(y.y.size())),
                           params);
}

// Plain variant: the detected scalar support is used as-is, no block vote.
inline RecoveryOutput isd_recover(const TruncatedBpSolver& solver, const Eigen::VectorXcd& y,
                                  double delta, const IsdParams& params = {}) {
  return detail::run_support_detection(solver, y, delta, params, false);
}

inline RecoveryOutput isd_recover(const SensingMatrix& theta, const Measurement& y,
                                  const IsdParams& params = {}) {
  TruncatedBpSolver solver(theta, params.solver);
  return isd_recover(solver, y.y, default_delta(y.noise_variance, static_cast<int>(y.y.size())),
                     params);
}

}  // namespace blockisd
