// SPDX-License-Identifier: Apache-2.0
//
// lecln: LiDAR-enhanced CSI learning for wideband multi-user hybrid MIMO-OFDM.

#ifndef LECLN_TYPES_HPP
#define LECLN_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace lecln {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using cplx = std::complex<double>;

using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 2.998e8;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// BS array, OFDM, and phase-shifter parameters.
struct SystemConfig {
  int n_t = 32;             // BS antennas (ULA)
  int n_rf = 8;             // RF chains, n_rf < n_t
  int n_s = 64;             // subcarriers
  int n_users = 2;          // K
  double f_c_ghz = 28.0;    // carrier, GHz
  double bandwidth_hz = 1e8;
  int ps_bits = 3;          // phase shifter quantization bits B
  double h_t = 5.0;         // transmitter height, m
  double h_r = 1.0;         // receiver antenna height, m

  double sample_interval_s() const { return 1.0 / bandwidth_hz; }
  void validate() const {
    if (n_rf >= n_t) throw std::invalid_argument("SystemConfig: require n_rf < n_t");
    if (n_t <= 0 || n_s <= 0 || n_users <= 0) throw std::invalid_argument("SystemConfig: counts must be positive");
    if (ps_bits < 1) throw std::invalid_argument("SystemConfig: ps_bits >= 1");
  }
};

// One propagation path. theta is the steering variable psi in [0, 2*pi)
// (the pi of the element phase is absorbed into the variable, so the
// codebook grid over [0, 2*pi) is a plain oversampled DFT grid).
struct ChannelPath {
  cplx alpha;    // complex amplitude, linear scale
  double theta;  // steering variable, radians
  double tau;    // delay normalized by the sampling interval
  double phi;    // phase shift, radians
};

// Maps a geometric azimuth (radians) to the steering variable.
inline double steering_from_azimuth(double azimuth) {
  double psi = kPi * std::sin(azimuth) + kPi;
  if (psi >= 2.0 * kPi) psi -= 2.0 * kPi;
  if (psi < 0.0) psi = 0.0;
  return psi;
}

}  // namespace lecln

#endif  // LECLN_TYPES_HPP
