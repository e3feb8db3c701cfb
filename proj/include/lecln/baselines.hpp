// SPDX-License-Identifier: Apache-2.0
//
// Classical estimators: least squares, orthogonal matching pursuit, and
// approximate message passing over the ULO-DFT angular dictionary, plus
// frequency-domain interpolation to full-band CSI.

#ifndef LECLN_BASELINES_HPP
#define LECLN_BASELINES_HPP

#include <vector>

#include "lecln/codebook.hpp"
#include "lecln/pilots.hpp"
#include "lecln/types.hpp"

namespace lecln {

struct SparseEstimate {
  CVec x_hat;                // angular-domain coefficients, zero off support
  std::vector<int> support;  // selected atoms in pick order
  double residual_norm = 0.0;
};

// Minimum-norm least squares for H from Y = F^H H S (single precoder block).
CMat ls_single(const CMat& y, const CMat& f_r, const CMat& s);

// Per-subcarrier stacked minimum-norm least squares over all pilot symbols.
// Sets *underdetermined when the stacked operator rank is below n_t.
CMat ls_pilot_estimate(const PilotObservation& obs, bool* underdetermined = nullptr);

// Greedy max-correlation pursuit with per-iteration re-projection; atoms are
// never repeated and the residual norm is non-increasing.
SparseEstimate omp_estimate(const CVec& y, const CMat& dict, int sparsity, double tol = 1e-12);

struct AmpResult {
  CVec x_hat;
  bool diverged = false;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Complex soft-threshold AMP with Onsager correction. Columns are normalized
// internally. On divergence (residual growth 10x over 5 iterations) the best
// iterate is returned with the diverged flag set.
AmpResult amp_estimate(const CVec& y, const CMat& dict, int iterations = 30, double damping = 0.7,
                       double threshold_scale = 1.0);

// Stacked per-subcarrier dictionary [S(p,n) F_n^H] A and measurement vector
// for pilot subcarrier index p (0-based within the plan).
CMat stacked_dictionary(const UloDftCodebook& cb, const PilotObservation& obs, int p);
CVec stacked_measurement(const PilotObservation& obs, int p);

CMat omp_pilot_estimate(const UloDftCodebook& cb, const PilotObservation& obs, int sparsity = 8);
CMat amp_pilot_estimate(const UloDftCodebook& cb, const PilotObservation& obs, int iterations = 30,
                        double damping = 0.7);

// Per-antenna linear interpolation of real/imag parts across subcarriers;
// edges hold the nearest pilot. Fewer than 2 pilots replicates the column.
CMat interpolate_freq(const CMat& h_p_hat, const std::vector<int>& v_k, int n_s);

}  // namespace lecln

#endif  // LECLN_BASELINES_HPP
