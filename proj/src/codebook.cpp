// SPDX-License-Identifier: Apache-2.0

#include "lecln/codebook.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "lecln/channel.hpp"

namespace lecln {

GridEndpoints oversampled_endpoints(double theta_k, int n_w, int n_t) {
  if (n_w % 2 == 0) throw std::invalid_argument("oversampled_endpoints: n_w must be odd");
  const double eps = 2.0 * kPi / (2.0 * n_t);
  const double half = eps * (n_w - 1) / 2.0;
  GridEndpoints ep;
  const double lo = theta_k - half;
  ep.phi_o1 = lo >= 0.0 ? eps * std::floor(lo / eps) : 0.0;
  ep.phi_o2 = eps * std::floor((theta_k + half) / eps);
  // The window never wraps past 2*pi.
  const double last = (2 * n_t - 1) * eps;
  if (ep.phi_o2 > last) ep.phi_o2 = last;
  if (ep.phi_o1 > ep.phi_o2) ep.phi_o1 = ep.phi_o2;
  return ep;
}

UloDftCodebook build_grid(const GridEndpoints& ep, double theta_k, int n_w, int d, int n_t) {
  UloDftCodebook cb;
  cb.endpoints = ep;
  cb.theta_k = theta_k;
  cb.n_w = n_w;
  cb.epsilon = 2.0 * kPi / (2.0 * n_t);
  cb.epsilon_o = cb.epsilon / 2.0;
  cb.n_o = static_cast<int>(std::lround((ep.phi_o2 - ep.phi_o1) / cb.epsilon_o));
  if (d <= cb.n_o) throw std::runtime_error("codebook too small");
  cb.epsilon_g = (2.0 * kPi - cb.n_o * cb.epsilon_o) / (d - cb.n_o);

  std::vector<double> grid;
  grid.reserve(d);
  // Plain subspace below the window, anchored at 0.
  for (int n = 0; n < d && n * cb.epsilon_g < ep.phi_o1 - 1e-12; ++n) grid.push_back(n * cb.epsilon_g);
  cb.over_begin = static_cast<int>(grid.size());
  // Over-sampled subspace [phi_o1, phi_o2).
  for (int n = 0; n < cb.n_o; ++n) grid.push_back(ep.phi_o1 + n * cb.epsilon_o);
  // Plain subspace from phi_o2 up to 2*pi.
  const int n_hi = d - static_cast<int>(grid.size());
  if (n_hi < 0) throw std::runtime_error("codebook too small");
  for (int n = 0; n < n_hi; ++n) grid.push_back(ep.phi_o2 + n * cb.epsilon_g);

  cb.phi = Eigen::Map<const Vec>(grid.data(), static_cast<Eigen::Index>(grid.size()));
  if (cb.phi.size() != d) throw std::logic_error("build_grid: grid size mismatch");
  if (cb.phi(d - 1) >= 2.0 * kPi) throw std::logic_error("build_grid: grid exceeds 2*pi");
  return cb;
}

void build_codebook(UloDftCodebook& cb) {
  const Eigen::Index d = cb.phi.size();
  for (Eigen::Index i = 1; i < d; ++i)
    if (cb.phi(i) <= cb.phi(i - 1) + 1e-12) throw std::runtime_error("codebook degenerate");
  // n_t is implicit in epsilon = pi / n_t.
  const int n_t = static_cast<int>(std::lround(kPi / cb.epsilon));
  cb.a.resize(n_t, d);
  for (Eigen::Index i = 0; i < d; ++i) cb.a.col(i) = array_response(cb.phi(i), n_t);
}

UloDftCodebook make_codebook(double theta_k, int d, int n_t, int n_w) {
  UloDftCodebook cb = build_grid(oversampled_endpoints(theta_k, n_w, n_t), theta_k, n_w, d, n_t);
  build_codebook(cb);
  return cb;
}

CMat window_align(const UloDftCodebook& cb, const CMat& x) {
  const Eigen::Index d = x.rows();
  CMat out(d, x.cols());
  for (Eigen::Index i = 0; i < d; ++i) out.row(i) = x.row((i + cb.over_begin) % d);
  return out;
}

CMat window_unalign(const UloDftCodebook& cb, const CMat& x) {
  const Eigen::Index d = x.rows();
  CMat out(d, x.cols());
  for (Eigen::Index i = 0; i < d; ++i) out.row((i + cb.over_begin) % d) = x.row(i);
  return out;
}

CMat angular_isometry(const UloDftCodebook& cb) {
  const CMat gram = cb.a * cb.a.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
  const Vec inv_sqrt = eig.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  return cb.a.adjoint() *
         (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().adjoint());
}

CMat a_h_pinv(const UloDftCodebook& cb) {
  const Eigen::Index n_t = cb.a.rows();
  const Eigen::Index d = cb.a.cols();
  const double lambda = 1e-9 * (cb.a.adjoint() * cb.a).trace().real() / static_cast<double>(d);
  CMat gram = cb.a * cb.a.adjoint() + lambda * CMat::Identity(n_t, n_t);
  return gram.llt().solve(cb.a);
}

namespace {

CMat pinv_svd(const CMat& m, double rel_cutoff = 1e-10) {
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff = rel_cutoff * sv(0);
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

SensingProjection make_sensing(const UloDftCodebook& cb, const CMat& f_r) {
  SensingProjection sp;
  sp.theta = f_r.adjoint() * a_h_pinv(cb);
  sp.theta_pinv = pinv_svd(sp.theta);
  return sp;
}

std::vector<double> project_block(const UloDftCodebook& cb, const CMat& f_r, const CMat& y_p) {
  const SensingProjection sp = make_sensing(cb, f_r);
  if (y_p.rows() != sp.theta.rows()) throw std::invalid_argument("project_block: shape mismatch");
  const CMat y_tilde = sp.theta_pinv * y_p;
  const Eigen::Index d = y_tilde.rows(), n = y_tilde.cols();
  std::vector<double> t(static_cast<std::size_t>(2 * d * n));
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      t[static_cast<std::size_t>(r * n + c)] = y_tilde(r, c).real();
      t[static_cast<std::size_t>(d * n + r * n + c)] = y_tilde(r, c).imag();
    }
  return t;
}

ProjectedMeasurement project_observation(const UloDftCodebook& cb, const PilotObservation& obs) {
  const int k_p = obs.plan.k_p;
  const int n_p = obs.plan.n_p;
  if (static_cast<int>(obs.y.size()) != n_p) throw std::invalid_argument("project_observation: bad observation");
  const Eigen::Index n_t = cb.a.rows();
  const Eigen::Index n_rf = obs.f.front().f_r.cols();

  // Solve the well-conditioned antenna-domain system [S(p,n) F_n^H] h = y
  // per subcarrier and transform to the angular domain by A^H afterwards.
  // Noiselessly this equals the minimum-norm solve of the sensing-space
  // system [S F^H (A^H)^dagger] x = y (both give x = A^H h exactly), but the
  // sensing-space operator inherits the near-collinear over-sampled columns
  // of A and amplifies noise far above the signal, while the random-precoder
  // antenna-domain operator keeps the noise at the nominal SNR level.
  ProjectedMeasurement out;
  CMat h_sub(n_t, k_p);
  CMat stacked(n_p * n_rf, n_t);
  CVec y(n_p * n_rf);
  for (int sub = 0; sub < k_p; ++sub) {
    for (int n = 0; n < n_p; ++n) {
      stacked.middleRows(n * n_rf, n_rf) =
          obs.s(sub, n) * obs.f[static_cast<std::size_t>(n)].f_r.adjoint();
      y.segment(n * n_rf, n_rf) = obs.y[static_cast<std::size_t>(n)].col(sub);
    }
    if (obs.sigma2 > 0.0) {
      // Ridge with the noise-to-prior ratio: per-element noise power in y is
      // sigma2 * n_t (unit-modulus precoder rows), and the prior variance of
      // h is estimated from the measured signal energy.
      const double rows = static_cast<double>(y.size());
      const double noise_el = obs.sigma2 * static_cast<double>(n_t);
      const double signal = std::max(y.squaredNorm() - rows * noise_el,
                                     1e-3 * rows * noise_el);
      const double lambda = noise_el * stacked.squaredNorm() / signal;
      const CMat gram = stacked.adjoint() * stacked + lambda * CMat::Identity(n_t, n_t);
      h_sub.col(sub) = gram.ldlt().solve(stacked.adjoint() * y);
    } else {
      h_sub.col(sub) = stacked.completeOrthogonalDecomposition().solve(y);
    }
  }
  out.x_angular = cb.a.adjoint() * h_sub;
  out.y_tilde = out.x_angular * obs.s;

  const Eigen::Index d = cb.a.cols();
  const CMat aligned = window_align(cb, angular_isometry(cb) * h_sub);
  out.tensor.resize(static_cast<std::size_t>(2 * d * k_p));
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < k_p; ++c) {
      out.tensor[static_cast<std::size_t>(r * k_p + c)] = aligned(r, c).real();
      out.tensor[static_cast<std::size_t>(d * k_p + r * k_p + c)] = aligned(r, c).imag();
    }
  return out;
}

}  // namespace lecln
