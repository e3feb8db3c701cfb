// SPDX-License-Identifier: Apache-2.0
//
// Pilot scheduling, quantized analog precoding, and the hybrid measurement
// model. The matrix primitive transmit_pilots() follows the single-precoder
// block equation; the pipeline uses observe_pilots(), which draws a fresh
// analog precoder per pilot symbol and keeps subcarriers separate, so the
// stacked observation reaches rank n_t whenever n_p * n_rf >= n_t.

#ifndef LECLN_PILOTS_HPP
#define LECLN_PILOTS_HPP

#include <vector>

#include "lecln/types.hpp"

namespace lecln {

struct PilotPlan {
  int k_p = 8;             // pilots along subcarriers
  int n_p = 8;             // pilot symbols along time
  int delta_v = 8;         // subcarrier interval floor(n_s/k_p)
  std::vector<int> v_k;    // 1-based pilot subcarrier indices for this user
};

// V_k = {k + (i-1)*delta_v : i = 1..k_p}, delta_v = floor(n_s/k_p).
// Throws "pilot plan infeasible" when k_users*k_p > n_s.
std::vector<int> pilot_subcarriers(int user, int n_s, int k_p, int k_users);

PilotPlan make_pilot_plan(int user, const SystemConfig& cfg, int k_p, int n_p);

struct AnalogPrecoder {
  CMat f_r;  // n_t x n_rf, entries exp(j*2*pi*n/Q), n in 1..Q
  int bits = 3;
  std::uint64_t seed = 0;
};

AnalogPrecoder make_precoder(const SystemConfig& cfg, std::uint64_t seed);

// Deterministic unit-energy pilot symbols: K_P-point unitary DFT repeated to
// n_p columns and scaled so that S * S^H = I_{k_p} exactly (requires k_p | n_p).
CMat pilot_symbols(int k_p, int n_p);

// Eq-style matrix primitive: Y = F^H H_P S + F^H N, N ~ CN(0, sigma2) iid.
CMat transmit_pilots(const CMat& h_p, const CMat& s_p, const CMat& f_r, double sigma2,
                     std::uint64_t seed);

// Full multi-symbol observation. Y[n] (n_rf x k_p) holds the per-subcarrier
// measurements of symbol n: Y[n](:,p) = F_n^H h_p * S(p,n) + F_n^H noise.
// Summing Y[n] over subcarriers reproduces the matrix primitive's column n.
struct PilotObservation {
  std::vector<CMat> y;               // n_p matrices, n_rf x k_p
  std::vector<AnalogPrecoder> f;     // one per symbol
  CMat s;                            // k_p x n_p
  double sigma2 = 0.0;
  PilotPlan plan;
};

PilotObservation observe_pilots(const CMat& h_p, const PilotPlan& plan, const SystemConfig& cfg,
                                double sigma2, std::uint64_t seed);

// All per-symbol precoders side by side, n_t x (n_p * n_rf).
CMat stacked_precoder(const PilotObservation& obs);

// SNR = ||F^H... : 10*log10(||F_R H||_F^2 / (sigma2 * ||F_R||_F^2)).
double measure_snr_db(const CMat& f_r, const CMat& h, double sigma2);

// Solves sigma2 so that measure_snr_db(f_r, h, sigma2) == snr_db.
double sigma2_for_snr(const CMat& f_r, const CMat& h, double snr_db);

}  // namespace lecln

#endif  // LECLN_PILOTS_HPP
