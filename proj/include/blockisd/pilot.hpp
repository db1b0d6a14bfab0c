#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "blockisd/channel.hpp"
#include "blockisd/rng.hpp"

namespace blockisd {

// Pilot allocation for one OFDM symbol: the pilot subcarrier index set Omega
// (0-based, sorted) and one unit-modulus pilot vector per transmit antenna.
struct PilotPlan {
  std::vector<int> omega;
  Eigen::MatrixXcd pilot_symbols;  // n_pilots x n_antennas, column i is c_i
  int n_subcarriers = 0;
  int n_pilots = 0;
};

enum class ColumnOrder { antenna_major, block };

// p x (n_antennas * length_per_antenna) measurement operator. antenna_major
// keeps per-antenna column groups contiguous; block interleaves antennas so
// each tap index forms one contiguous block of n_antennas columns.
struct SensingMatrix {
  Eigen::MatrixXcd entries;
  ColumnOrder order = ColumnOrder::antenna_major;
  int n_antennas = 0;
  int length_per_antenna = 0;
};

struct Measurement {
  Eigen::VectorXcd y;
  double noise_variance = 0.0;  // per-entry E|n_k|^2
};

// Draws p distinct pilot subcarriers uniformly from [0, N) and i.i.d.
// quaternary unit-modulus pilot symbols (+-1 +-j)/sqrt(2) per antenna.
inline PilotPlan make_pilot_plan(int n_subcarriers, int n_pilots, int n_antennas, Rng& rng) {
  if (n_pilots < 1 || n_pilots > n_subcarriers)
    throw std::invalid_argument("need 1 <= p <= N pilot subcarriers");
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");

  std::vector<int> indexes(static_cast<std::size_t>(n_subcarriers));
  std::iota(indexes.begin(), indexes.end(), 0);
  for (int k = 0; k < n_pilots; ++k) {
    const int j = k + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n_subcarriers - k)));
    std::swap(indexes[k], indexes[j]);
  }
  PilotPlan plan;
  plan.omega.assign(indexes.begin(), indexes.begin() + n_pilots);
  std::sort(plan.omega.begin(), plan.omega.end());
  plan.n_subcarriers = n_subcarriers;
  plan.n_pilots = n_pilots;

  static const std::complex<double> alphabet[4] = {
      {M_SQRT1_2, M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2}, {-M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, -M_SQRT1_2}};
  plan.pilot_symbols.resize(n_pilots, n_antennas);
  for (int antenna = 0; antenna < n_antennas; ++antenna)
    for (int row = 0; row < n_pilots; ++row)
      plan.pilot_symbols(row, antenna) = alphabet[rng.uniform_below(4)];
  return plan;
}

// Builds the antenna-major sensing matrix: block i equals diag(c_i) times the
// Omega rows of the first channel_length columns of the N-point DFT matrix,
// with the unnormalized convention F(m, k) = exp(-j 2 pi m k / N), 0-based.
inline SensingMatrix build_sensing_matrix(const PilotPlan& plan, int channel_length) {
  if (channel_length < 1) throw std::invalid_argument("channel_length must be >= 1");
  const int p = plan.n_pilots;
  const int n_antennas = static_cast<int>(plan.pilot_symbols.cols());
  const std::int64_t N = plan.n_subcarriers;

  Eigen::MatrixXcd dft_rows(p, channel_length);
  for (int row = 0; row < p; ++row) {
    const std::int64_t m = plan.omega[static_cast<std::size_t>(row)];
    for (int l = 0; l < channel_length; ++l) {
      const std::int64_t phase_index = (m * l) % N;  // exact, keeps the phase argument small
      dft_rows(row, l) = std::polar(1.0, -2.0 * M_PI * static_cast<double>(phase_index) / static_cast<double>(N));
    }
  }

  SensingMatrix matrix;
  matrix.order = ColumnOrder::antenna_major;
  matrix.n_antennas = n_antennas;
  matrix.length_per_antenna = channel_length;
  matrix.entries.resize(p, static_cast<Eigen::Index>(n_antennas) * channel_length);
  for (int antenna = 0; antenna < n_antennas; ++antenna)
    matrix.entries.middleCols(static_cast<Eigen::Index>(antenna) * channel_length, channel_length) =
        plan.pilot_symbols.col(antenna).asDiagonal() * dft_rows;
  return matrix;
}

// Antenna-major CIR h to block-sparse equivalent g:
// g(l * N_T + t) = h(t * L + l) for tap l in [0, L) and antenna t in [0, N_T).
inline Eigen::VectorXcd h_to_g(const Eigen::VectorXcd& h, int n_antennas, int channel_length) {
  if (h.size() != static_cast<Eigen::Index>(n_antennas) * channel_length)
    throw std::invalid_argument("h length is not n_antennas * channel_length");
  Eigen::VectorXcd g(h.size());
  for (int t = 0; t < n_antennas; ++t)
    for (int l = 0; l < channel_length; ++l)
      g(static_cast<Eigen::Index>(l) * n_antennas + t) = h(static_cast<Eigen::Index>(t) * channel_length + l);
  return g;
}

inline Eigen::VectorXcd h_to_g(const Cir& cir) {
  return h_to_g(cir.coeffs, cir.n_antennas, cir.length_per_antenna);
}

inline Eigen::VectorXcd g_to_h(const Eigen::VectorXcd& g, int n_antennas, int channel_length) {
  if (g.size() != static_cast<Eigen::Index>(n_antennas) * channel_length)
    throw std::invalid_argument("g length is not n_antennas * channel_length");
  Eigen::VectorXcd h(g.size());
  for (int t = 0; t < n_antennas; ++t)
    for (int l = 0; l < channel_length; ++l)
      h(static_cast<Eigen::Index>(t) * channel_length + l) = g(static_cast<Eigen::Index>(l) * n_antennas + t);
  return h;
}

// Rearranges P's columns into block order: Theta(:, l * N_T + t) = P(:, t * L + l),
// so that P h = Theta h_to_g(h) for every h.
inline SensingMatrix p_to_theta(const SensingMatrix& antenna_major) {
  if (antenna_major.order != ColumnOrder::antenna_major)
    throw std::invalid_argument("p_to_theta expects an antenna-major matrix");
  const int n_antennas = antenna_major.n_antennas;
  const int length = antenna_major.length_per_antenna;
  SensingMatrix block;
  block.order = ColumnOrder::block;
  block.n_antennas = n_antennas;
  block.length_per_antenna = length;
  block.entries.resize(antenna_major.entries.rows(), antenna_major.entries.cols());
  for (int t = 0; t < n_antennas; ++t)
    for (int l = 0; l < length; ++l)
      block.entries.col(static_cast<Eigen::Index>(l) * n_antennas + t) =
          antenna_major.entries.col(static_cast<Eigen::Index>(t) * length + l);
  return block;
}

// Received pilot vector y = Theta g + n. The per-entry complex noise variance
// is set from the realized signal energy so the trial SNR is exact:
// sigma^2 = ||Theta g||^2 / (p * 10^(snr_db / 10)). An infinite snr_db (or a
// zero signal) gives a noiseless measurement with sigma^2 = 0.
inline Measurement measure(const SensingMatrix& theta, const Eigen::VectorXcd& g, double snr_db, Rng& rng) {
  if (theta.entries.cols() != g.size()) throw std::invalid_argument("sensing matrix and g disagree in size");
  Measurement meas;
  meas.y = theta.entries * g;
  const double signal_energy = meas.y.squaredNorm();
  if (std::isinf(snr_db) || signal_energy == 0.0) {
    meas.noise_variance = 0.0;
    return meas;
  }
  const Eigen::Index p = meas.y.size();
  meas.noise_variance = signal_energy / (static_cast<double>(p) * std::pow(10.0, snr_db / 10.0));
  for (Eigen::Index k = 0; k < p; ++k) meas.y(k) += rng.complex_gaussian(meas.noise_variance);
  return meas;
}

}  // namespace blockisd
