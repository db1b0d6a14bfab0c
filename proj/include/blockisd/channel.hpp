#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockisd/rng.hpp"

namespace blockisd {

// Tapped-delay-line power-delay profile. Delays are mapped onto sample-spaced
// taps at the configured bandwidth; tap indexes are 0-based internally.
struct ChannelProfile {
  std::vector<double> tap_delays_ns;
  std::vector<double> tap_powers_db;
  double bandwidth_hz = 50e6;
  int max_length_L = 128;
};

// ITU-R M.1225 Vehicular-A power-delay profile.
inline ChannelProfile vehicular_a(double bandwidth_hz = 50e6, int max_length_L = 128) {
  return ChannelProfile{{0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0},
                        {0.0, -1.0, -9.0, -10.0, -15.0, -20.0},
                        bandwidth_hz,
                        max_length_L};
}

// Vehicular-A with delays rescaled so the delay spread exactly fills a
// channel of max_length_L samples: the last tap lands on sample
// max_length_L - 1, the rest keep their relative positions.
inline ChannelProfile vehicular_a_scaled(int max_length_L, double bandwidth_hz = 50e6) {
  if (max_length_L < 2) throw std::invalid_argument("scaled profile needs max_length_L >= 2");
  ChannelProfile profile = vehicular_a(bandwidth_hz, max_length_L);
  const double last_sample = profile.tap_delays_ns.back() * 1e-9 * bandwidth_hz;
  const double factor = static_cast<double>(max_length_L - 1) / last_sample;
  for (double& d : profile.tap_delays_ns) d *= factor;
  return profile;
}

inline void validate(const ChannelProfile& profile) {
  if (profile.tap_delays_ns.empty()) throw std::invalid_argument("channel profile has no taps");
  if (profile.tap_delays_ns.size() != profile.tap_powers_db.size())
    throw std::invalid_argument("tap_delays_ns and tap_powers_db differ in length");
  if (profile.tap_delays_ns.front() != 0.0)
    throw std::invalid_argument("first tap delay must be 0");
  for (std::size_t k = 1; k < profile.tap_delays_ns.size(); ++k)
    if (!(profile.tap_delays_ns[k] > profile.tap_delays_ns[k - 1]))
      throw std::invalid_argument("tap delays must be strictly increasing");
  if (!(profile.bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be positive");
  if (profile.max_length_L < 1) throw std::invalid_argument("max_length_L must be >= 1");
}

// Maps each tap delay to a 0-based sample index round(delay_ns * 1e-9 * bw),
// rounding half to even, then deduplicates. A tap landing at or beyond
// max_length_L is a configuration error.
inline std::vector<int> profile_to_support(const ChannelProfile& profile) {
  validate(profile);
  std::vector<int> taps;
  taps.reserve(profile.tap_delays_ns.size());
  for (double delay_ns : profile.tap_delays_ns) {
    const double sample = delay_ns * 1e-9 * profile.bandwidth_hz;
    const int index = static_cast<int>(std::nearbyint(sample));  // FE_TONEAREST: half to even
    if (index >= profile.max_length_L)
      throw std::invalid_argument("tap delay maps beyond the channel length");
    taps.push_back(index < 0 ? 0 : index);
  }
  std::sort(taps.begin(), taps.end());
  taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
  return taps;
}

// Aggregate channel impulse response across transmit antennas, stored
// antenna-major: coeffs = [h_1; h_2; ...], each h_i of length_per_antenna.
// All antennas share the same tap positions (common support).
struct Cir {
  Eigen::VectorXcd coeffs;
  int n_antennas = 0;
  int length_per_antenna = 0;
  std::vector<int> support;  // sorted 0-based indexes of the nonzero entries
};

// Tap indexes in [0, length_per_antenna) shared by all antennas.
inline std::vector<int> tap_support(const Cir& cir) {
  std::vector<int> taps;
  for (int k : cir.support) {
    const int tap = k % cir.length_per_antenna;
    if (taps.empty() || taps.back() != tap) taps.push_back(tap);
  }
  std::sort(taps.begin(), taps.end());
  taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
  return taps;
}

// Draws one CIR realization: every antenna gets independent complex Gaussian
// gains on the shared tap set, with per-tap variances from the profile powers
// normalized to unit expected energy per antenna. Delays colliding on one
// sample index add their linear powers.
inline Cir generate_cir(const ChannelProfile& profile, int n_antennas, Rng& rng) {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  const std::vector<int> taps = profile_to_support(profile);
  if (taps.empty()) throw std::invalid_argument("channel profile yields an empty support");

  std::vector<double> tap_power(taps.size(), 0.0);
  for (std::size_t k = 0; k < profile.tap_delays_ns.size(); ++k) {
    const double sample = profile.tap_delays_ns[k] * 1e-9 * profile.bandwidth_hz;
    int index = static_cast<int>(std::nearbyint(sample));
    if (index < 0) index = 0;
    const auto slot = std::lower_bound(taps.begin(), taps.end(), index) - taps.begin();
    tap_power[static_cast<std::size_t>(slot)] += std::pow(10.0, profile.tap_powers_db[k] / 10.0);
  }
  double total = 0.0;
  for (double v : tap_power) total += v;
  for (double& v : tap_power) v /= total;

  const int length = profile.max_length_L;
  Cir cir;
  cir.n_antennas = n_antennas;
  cir.length_per_antenna = length;
  cir.coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_antennas) * length);
  cir.support.reserve(taps.size() * static_cast<std::size_t>(n_antennas));
  for (int antenna = 0; antenna < n_antennas; ++antenna) {
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const int index = antenna * length + taps[t];
      cir.coeffs(index) = rng.complex_gaussian(tap_power[t]);
      cir.support.push_back(index);
    }
  }
  return cir;
}

}  // namespace blockisd
