#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "blockisd/baselines.hpp"
#include "blockisd/harness.hpp"

using namespace blockisd;
using Catch::Approx;

namespace {

SensingMatrix make_theta(int n_subcarriers, int n_pilots, int n_antennas, int channel_length,
                         Rng& rng) {
  const PilotPlan plan = make_pilot_plan(n_subcarriers, n_pilots, n_antennas, rng);
  return p_to_theta(build_sensing_matrix(plan, channel_length));
}

Eigen::VectorXcd block_sparse_g(const std::vector<int>& blocks, int n_antennas, int channel_length,
                                Rng& rng) {
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n_antennas * channel_length);
  for (int l : blocks)
    for (int t = 0; t < n_antennas; ++t)
      g(l * n_antennas + t) =
          std::polar(0.5 + rng.uniform01(), 2.0 * std::numbers::pi * rng.uniform01());
  return g;
}

std::vector<int> expand_blocks(const std::vector<int>& blocks, int n_antennas) {
  std::vector<int> support;
  for (int l : blocks)
    for (int t = 0; t < n_antennas; ++t) support.push_back(l * n_antennas + t);
  std::sort(support.begin(), support.end());
  return support;
}

bool bitwise(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("basis pursuit recovers a noiseless sparse vector", "[baselines]") {
  Rng rng(31);
  const SensingMatrix theta = make_theta(256, 48, 4, 16, rng);
  const TruncatedBpSolver solver(theta);
  const Eigen::VectorXcd g = block_sparse_g({3, 10}, 4, 16, rng);
  const RecoveryOutput out = bp_recover(solver, theta.entries * g, 0.0);
  CHECK(nmse(out.g_hat, g) < 1e-6);
  CHECK(out.iterations_used == 1);
  CHECK(out.termination_reason == TerminationReason::single_shot);
  CHECK(out.solver_converged);
}

TEST_CASE("a fidelity ball covering the data yields the zero estimate", "[baselines]") {
  Rng rng(32);
  const SensingMatrix theta = make_theta(64, 16, 2, 8, rng);
  const TruncatedBpSolver solver(theta);
  Eigen::VectorXcd y(16);
  for (int k = 0; k < 16; ++k) y(k) = rng.complex_gaussian(1.0);
  const RecoveryOutput out = bp_recover(solver, y, 2.0 * y.norm());
  CHECK(out.g_hat.norm() == 0.0);
  CHECK(out.final_support.empty());
  CHECK(out.solver_converged);
}

TEST_CASE("basis pursuit equals a support-detection run capped at one pass", "[baselines]") {
  Rng rng(33);
  const SensingMatrix theta = make_theta(128, 24, 4, 16, rng);
  const TruncatedBpSolver solver(theta);
  const Eigen::VectorXcd g = block_sparse_g({2, 8}, 4, 16, rng);
  const Measurement m = measure(theta, g, 10.0, rng);
  const double delta = default_delta(m.noise_variance, 24);

  const RecoveryOutput bp = bp_recover(solver, m.y, delta);
  IsdParams params;
  params.iteration_cap = 1;
  const RecoveryOutput capped = block_isd_recover(solver, m.y, delta, params);
  CHECK(bitwise(bp.g_hat, capped.g_hat));
}

TEST_CASE("unconverged single-pass solves are reported", "[baselines]") {
  Rng rng(34);
  const SensingMatrix theta = make_theta(64, 12, 2, 8, rng);
  Eigen::VectorXcd y(12);
  for (int k = 0; k < 12; ++k) y(k) = rng.complex_gaussian(1.0);
  SolverParams params;
  params.max_iterations = 1;
  const RecoveryOutput out = bp_recover(theta, Measurement{y, 0.0}, 0.0, params);
  CHECK_FALSE(out.solver_converged);
}

TEST_CASE("genie least squares is exact on noiseless data", "[baselines]") {
  Rng rng(35);
  const SensingMatrix theta = make_theta(256, 48, 4, 16, rng);
  const std::vector<int> blocks{2, 9};
  const Eigen::VectorXcd g = block_sparse_g(blocks, 4, 16, rng);
  const RecoveryOutput out = oracle_ls(theta, theta.entries * g, OracleInfo{blocks});
  CHECK((out.g_hat - g).norm() <= 1e-12 * g.norm());
  CHECK(out.final_support == expand_blocks(blocks, 4));
  CHECK(out.termination_reason == TerminationReason::oracle);
}

TEST_CASE("genie least squares solves the normal equations on noisy data", "[baselines]") {
  Rng rng(36);
  const SensingMatrix theta = make_theta(256, 48, 4, 16, rng);
  const std::vector<int> blocks{0, 6, 13};
  const Eigen::VectorXcd g = block_sparse_g(blocks, 4, 16, rng);
  const Measurement m = measure(theta, g, 10.0, rng);
  const RecoveryOutput out = oracle_ls(theta, m.y, OracleInfo{blocks});

  const std::vector<int> columns = expand_blocks(blocks, 4);
  Eigen::MatrixXcd restricted(theta.entries.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    restricted.col(static_cast<Eigen::Index>(j)) = theta.entries.col(columns[j]);
  const Eigen::VectorXcd gradient = restricted.adjoint() * (theta.entries * out.g_hat - m.y);
  CHECK(gradient.norm() <= 1e-9 * m.y.norm());
  // off-support entries stay exactly zero
  for (int k = 0; k < out.g_hat.size(); ++k)
    if (!std::binary_search(columns.begin(), columns.end(), k)) CHECK(out.g_hat(k) == 0.0);
}

TEST_CASE("genie least squares restricted to identity columns copies the data", "[baselines]") {
  SensingMatrix theta;
  theta.order = ColumnOrder::block;
  theta.n_antennas = 4;
  theta.length_per_antenna = 2;
  theta.entries = Eigen::MatrixXcd::Identity(8, 8);
  Rng rng(37);
  Eigen::VectorXcd y(8);
  for (int k = 0; k < 8; ++k) y(k) = rng.complex_gaussian(1.0);
  const RecoveryOutput out = oracle_ls(theta, y, OracleInfo{{1}});
  for (int k = 0; k < 4; ++k) CHECK(out.g_hat(k) == 0.0);
  CHECK((out.g_hat.tail(4) - y.tail(4)).norm() <= 1e-14 * y.norm());
}

TEST_CASE("genie support is canonicalized before solving", "[baselines]") {
  Rng rng(38);
  const SensingMatrix theta = make_theta(128, 32, 4, 16, rng);
  Eigen::VectorXcd y(32);
  for (int k = 0; k < 32; ++k) y(k) = rng.complex_gaussian(1.0);
  const RecoveryOutput shuffled = oracle_ls(theta, y, OracleInfo{{9, 2, 9}});
  const RecoveryOutput sorted = oracle_ls(theta, y, OracleInfo{{2, 9}});
  CHECK(shuffled.final_support == expand_blocks({2, 9}, 4));
  CHECK(bitwise(shuffled.g_hat, sorted.g_hat));
}

TEST_CASE("genie least squares rejects unusable supports", "[baselines]") {
  Rng rng(39);
  const SensingMatrix wide = make_theta(64, 6, 4, 8, rng);  // p = 6 rows
  Eigen::VectorXcd y(6);
  for (int k = 0; k < 6; ++k) y(k) = rng.complex_gaussian(1.0);
  // two blocks need 8 columns but only 6 rows exist
  CHECK_THROWS_AS(oracle_ls(wide, y, OracleInfo{{0, 1}}), OracleRankError);
  CHECK_THROWS_AS(oracle_ls(wide, y, OracleInfo{{}}), std::invalid_argument);
  CHECK_THROWS_AS(oracle_ls(wide, y, OracleInfo{{8}}), std::invalid_argument);
  CHECK_THROWS_AS(oracle_ls(wide, y, OracleInfo{{-1}}), std::invalid_argument);

  SensingMatrix antenna_major = wide;
  antenna_major.order = ColumnOrder::antenna_major;
  CHECK_THROWS_AS(oracle_ls(antenna_major, y, OracleInfo{{0}}), std::invalid_argument);
}
