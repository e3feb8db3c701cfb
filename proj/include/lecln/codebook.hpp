// SPDX-License-Identifier: Apache-2.0
//
// User-localized over-complete DFT codebook: the angular grid over [0, 2*pi)
// is densified (spacing eps/2) inside a window centered on the user's coarse
// angle, and the pilot observations are projected into that angular space.

#ifndef LECLN_CODEBOOK_HPP
#define LECLN_CODEBOOK_HPP

#include <array>
#include <utility>
#include <vector>

#include "lecln/pilots.hpp"
#include "lecln/types.hpp"

namespace lecln {

struct GridEndpoints {
  double phi_o1 = 0.0;
  double phi_o2 = 0.0;
};

struct UloDftCodebook {
  Vec phi;          // D sorted steering values in [0, 2*pi)
  CMat a;           // n_t x D steering matrix
  GridEndpoints endpoints;
  double epsilon = 0.0;    // 2*pi / (2*n_t)
  double epsilon_o = 0.0;  // epsilon / 2
  double epsilon_g = 0.0;  // plain-subspace spacing
  int n_o = 0;             // grid points in the over-sampled subspace
  int over_begin = 0;      // first over-sampled grid index
  int n_w = 13;
  double theta_k = 0.0;
};

// Over-sampled window endpoints; clamps phi_o1 at 0 and phi_o2 below 2*pi.
GridEndpoints oversampled_endpoints(double theta_k, int n_w, int n_t);

// Grid of exactly d values: eps/2 spacing inside [phi_o1, phi_o2), spacing
// eps_g = (2*pi - n_o*eps_o)/(d - n_o) elsewhere.
UloDftCodebook build_grid(const GridEndpoints& ep, double theta_k, int n_w, int d, int n_t);

// Fills the steering matrix; throws "codebook degenerate" on duplicate grid values.
void build_codebook(UloDftCodebook& cb);

UloDftCodebook make_codebook(double theta_k, int d, int n_t, int n_w = 13);

// (A^H)^dagger computed as (A A^H + lambda I)^{-1} A with
// lambda = 1e-9 * trace(A^H A) / D.
CMat a_h_pinv(const UloDftCodebook& cb);

// Sensing matrix Theta = F^H (A^H)^dagger and its SVD pseudo-inverse
// (singular values below 1e-10 * sigma_max are dropped).
struct SensingProjection {
  CMat theta;       // n_rf x D
  CMat theta_pinv;  // D x n_rf
};

SensingProjection make_sensing(const UloDftCodebook& cb, const CMat& f_r);

// Single-block projection per the sensing-matrix equation:
// returns Theta^dagger * Y as a 2 x D x n_cols real tensor (planes re, im),
// flattened row-major over (plane, d, col).
std::vector<double> project_block(const UloDftCodebook& cb, const CMat& f_r, const CMat& y_p);

// Pipeline projection over a multi-symbol observation: for each pilot
// subcarrier p, the per-symbol measurements are stacked into the
// antenna-domain system [S(p,n) * F_n^H] h_p = [y_n(:,p)], solved
// (minimum-norm when noiseless, ridge otherwise), and transformed to the
// angular estimate X = A^H H (D x k_p); X is re-mixed to X*S (D x n_p).
struct ProjectedMeasurement {
  CMat x_angular;          // D x k_p
  CMat y_tilde;            // D x n_p, X * S
  // Network input: the window-aligned angular solution X as re/im planes.
  // X is used rather than Y~ = X * S because S is drawn per observation; a
  // learner that only ever sees X * S would face an unobservable random
  // re-mixing of the subcarriers on every sample.
  std::vector<double> tensor;  // 2 x D x k_p real, row-major
};

// Cyclic row re-indexing so the over-sampled window starts at row 0. The
// window tracks the coarse user angle, so aligned tensors always present the
// user's angular neighbourhood at the same rows regardless of theta_k; a
// learner then sees one consistent layout instead of a per-sample latent
// window position. The two functions are mutual inverses.
CMat window_align(const UloDftCodebook& cb, const CMat& x);
CMat window_unalign(const UloDftCodebook& cb, const CMat& x);

// Energy-preserving angular transform T = A^H (A A^H)^{-1/2} (D x n_t, an
// isometry: T^H T = I). Rows stay localized around the grid angles like
// A^H, but squared errors measured on T h equal squared errors on h, so a
// learner trained on the transformed tensor optimizes the antenna-domain
// channel error directly; reconstruction is h = T^H x.
CMat angular_isometry(const UloDftCodebook& cb);

ProjectedMeasurement project_observation(const UloDftCodebook& cb, const PilotObservation& obs);

}  // namespace lecln

#endif  // LECLN_CODEBOOK_HPP
