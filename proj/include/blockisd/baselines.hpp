#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include "blockisd/isd.hpp"

namespace blockisd {

// Genie knowledge handed to the least-squares lower bound: which blocks of
// the rearranged channel vector are truly nonzero.
struct OracleInfo {
  std::vector<int> true_block_support;  // block indexes in [0, L)
};

struct OracleRankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One-pass basis-pursuit denoising over the full index set. Bit-comparable
// with the first iterate of the support-detection loop, which solves the
// same subproblem from the same starting point.
inline RecoveryOutput bp_recover(const TruncatedBpSolver& solver, const Eigen::VectorXcd& y,
                                 double delta) {
  const int n = static_cast<int>(solver.sensing_matrix().entries.cols());
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  SolverResult solved = solver.solve(y, all, delta);
  RecoveryOutput out;
  out.g_hat = std::move(solved.g_hat);
  out.final_support = detect_support(out.g_hat, 0.0);  // reporting only
  out.iterations_used = 1;
  out.termination_reason = TerminationReason::single_shot;
  out.solver_converged = solved.converged;
  return out;
}

inline RecoveryOutput bp_recover(const SensingMatrix& theta, const Measurement& y,
                                 double delta, const SolverParams& params = {}) {
  TruncatedBpSolver solver(theta, params);
  return bp_recover(solver, y.y, delta);
}

// Least squares restricted to the columns of the truly nonzero blocks;
// everything else is zero. Lower bound for the sparse recoveries.
inline RecoveryOutput oracle_ls(const SensingMatrix& theta, const Eigen::VectorXcd& y,
                                const OracleInfo& oracle) {
  if (theta.order != ColumnOrder::block)
    throw std::invalid_argument("oracle LS expects the block column order");
  const int n_antennas = theta.n_antennas;
  const int channel_length = theta.length_per_antenna;
  std::vector<int> blocks = oracle.true_block_support;
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  std::vector<int> columns;
  for (int l : blocks) {
    if (l < 0 || l >= channel_length) throw std::invalid_argument("block index out of range");
    for (int t = 0; t < n_antennas; ++t) columns.push_back(l * n_antennas + t);
  }
  if (columns.empty()) throw std::invalid_argument("oracle support is empty");

  Eigen::MatrixXcd restricted(theta.entries.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) restricted.col(static_cast<Eigen::Index>(j)) = theta.entries.col(columns[j]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(restricted);
  if (qr.rank() < restricted.cols())
    throw OracleRankError("support columns are rank deficient (" + std::to_string(qr.rank()) +
                          " < " + std::to_string(restricted.cols()) + ")");
  const Eigen::VectorXcd coefficients = qr.solve(y);

  RecoveryOutput out;
  out.g_hat = Eigen::VectorXcd::Zero(theta.entries.cols());
  for (std::size_t j = 0; j < columns.size(); ++j) out.g_hat(columns[j]) = coefficients(static_cast<Eigen::Index>(j));
  out.final_support = columns;
  out.iterations_used = 1;
  out.termination_reason = TerminationReason::oracle;
  return out;
}

}  // namespace blockisd
