// SPDX-License-Identifier: Apache-2.0

#include "lecln/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace lecln {

CMat ls_single(const CMat& y, const CMat& f_r, const CMat& s) {
  if (y.rows() != f_r.cols() || y.cols() != s.cols())
    throw std::invalid_argument("ls_single: shape mismatch");
  const CMat fh = f_r.adjoint();
  const CMat fh_pinv = fh.completeOrthogonalDecomposition().pseudoInverse();
  const CMat s_pinv = s.completeOrthogonalDecomposition().pseudoInverse();
  return fh_pinv * y * s_pinv;
}

CMat ls_pilot_estimate(const PilotObservation& obs, bool* underdetermined) {
  const int n_p = obs.plan.n_p;
  const int k_p = obs.plan.k_p;
  if (static_cast<int>(obs.y.size()) != n_p || static_cast<int>(obs.f.size()) != n_p)
    throw std::invalid_argument("ls_pilot_estimate: inconsistent observation");
  const Eigen::Index n_t = obs.f.front().f_r.rows();
  const Eigen::Index n_rf = obs.f.front().f_r.cols();
  const Eigen::Index rows = static_cast<Eigen::Index>(n_p) * n_rf;
  CMat h_p(n_t, k_p);
  bool under = false;
  for (int p = 0; p < k_p; ++p) {
    CMat m(rows, n_t);
    CVec b(rows);
    for (int n = 0; n < n_p; ++n) {
      m.middleRows(static_cast<Eigen::Index>(n) * n_rf, n_rf) =
          obs.s(p, n) * obs.f[static_cast<std::size_t>(n)].f_r.adjoint();
      b.segment(static_cast<Eigen::Index>(n) * n_rf, n_rf) =
          obs.y[static_cast<std::size_t>(n)].col(p);
    }
    const auto cod = m.completeOrthogonalDecomposition();
    if (cod.rank() < n_t) under = true;
    h_p.col(p) = cod.solve(b);
  }
  if (underdetermined) *underdetermined = under;
  return h_p;
}

SparseEstimate omp_estimate(const CVec& y, const CMat& dict, int sparsity, double tol) {
  if (sparsity < 0 || sparsity > dict.rows())
    throw std::invalid_argument("omp_estimate: sparsity must be in [0, rows]");
  const Eigen::Index d = dict.cols();
  Vec col_norm(d);
  for (Eigen::Index j = 0; j < d; ++j) col_norm(j) = std::max(dict.col(j).norm(), 1e-300);
  SparseEstimate est;
  est.x_hat = CVec::Zero(d);
  CVec r = y;
  est.residual_norm = r.norm();
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (int it = 0; it < sparsity && est.residual_norm > tol; ++it) {
    int best = -1;
    double best_corr = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double c = std::abs(dict.col(j).dot(r)) / col_norm(j);
      if (c > best_corr) {
        best_corr = c;
        best = static_cast<int>(j);
      }
    }
    if (best < 0 || best_corr <= tol) break;
    used[static_cast<std::size_t>(best)] = true;
    est.support.push_back(best);
    CMat sub(dict.rows(), static_cast<Eigen::Index>(est.support.size()));
    for (std::size_t i = 0; i < est.support.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = dict.col(est.support[i]);
    const CVec coef = sub.completeOrthogonalDecomposition().solve(y);
    r = y - sub * coef;
    est.residual_norm = r.norm();
    est.x_hat.setZero();
    for (std::size_t i = 0; i < est.support.size(); ++i)
      est.x_hat(est.support[i]) = coef(static_cast<Eigen::Index>(i));
  }
  return est;
}

AmpResult amp_estimate(const CVec& y, const CMat& dict, int iterations, double damping,
                       double threshold_scale) {
  const Eigen::Index n = dict.rows(), d = dict.cols();
  if (y.size() != n) throw std::invalid_argument("amp_estimate: shape mismatch");
  CMat a = dict;
  Vec scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    scale(j) = std::max(a.col(j).norm(), 1e-300);
    a.col(j) /= scale(j);
  }
  AmpResult res;
  res.x_hat = CVec::Zero(d);
  CVec x = CVec::Zero(d);
  CVec z = y;
  CVec best_x = x;
  double best_res = z.norm();
  double base_res = best_res;
  int growth_age = 0;
  for (int it = 0; it < iterations; ++it) {
    const CVec r = x + a.adjoint() * z;
    const double tau =
        threshold_scale * z.norm() / std::sqrt(static_cast<double>(n));
    CVec x_new = CVec::Zero(d);
    int nz = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double mag = std::abs(r(j));
      if (mag > tau) {
        x_new(j) = r(j) * ((mag - tau) / mag);
        ++nz;
      }
    }
    x = damping * x_new + (1.0 - damping) * x;
    const double onsager = static_cast<double>(nz) / static_cast<double>(n);
    const CVec z_new = y - a * x + onsager * z;
    z = damping * z_new + (1.0 - damping) * z;
    res.iterations = it + 1;
    const double rn = (y - a * x).norm();
    if (rn < best_res) {
      best_res = rn;
      best_x = x;
    }
    if (rn > base_res * 10.0) {
      if (++growth_age >= 5) {
        res.diverged = true;
        break;
      }
    } else {
      growth_age = 0;
      base_res = std::min(base_res, rn);
    }
  }
  res.x_hat = best_x.cwiseQuotient(scale.cast<cplx>());
  res.residual_norm = best_res;
  return res;
}

CMat stacked_dictionary(const UloDftCodebook& cb, const PilotObservation& obs, int p) {
  const int n_p = obs.plan.n_p;
  const Eigen::Index n_rf = obs.f.front().f_r.cols();
  CMat m(static_cast<Eigen::Index>(n_p) * n_rf, cb.a.cols());
  for (int n = 0; n < n_p; ++n)
    m.middleRows(static_cast<Eigen::Index>(n) * n_rf, n_rf) =
        obs.s(p, n) * (obs.f[static_cast<std::size_t>(n)].f_r.adjoint() * cb.a);
  return m;
}

CVec stacked_measurement(const PilotObservation& obs, int p) {
  const int n_p = obs.plan.n_p;
  const Eigen::Index n_rf = obs.f.front().f_r.cols();
  CVec b(static_cast<Eigen::Index>(n_p) * n_rf);
  for (int n = 0; n < n_p; ++n)
    b.segment(static_cast<Eigen::Index>(n) * n_rf, n_rf) =
        obs.y[static_cast<std::size_t>(n)].col(p);
  return b;
}

CMat omp_pilot_estimate(const UloDftCodebook& cb, const PilotObservation& obs, int sparsity) {
  const int k_p = obs.plan.k_p;
  CMat h_p(cb.a.rows(), k_p);
  for (int p = 0; p < k_p; ++p) {
    const SparseEstimate est =
        omp_estimate(stacked_measurement(obs, p), stacked_dictionary(cb, obs, p), sparsity);
    h_p.col(p) = cb.a * est.x_hat;
  }
  return h_p;
}

CMat amp_pilot_estimate(const UloDftCodebook& cb, const PilotObservation& obs, int iterations,
                        double damping) {
  const int k_p = obs.plan.k_p;
  CMat h_p(cb.a.rows(), k_p);
  for (int p = 0; p < k_p; ++p) {
    const AmpResult est =
        amp_estimate(stacked_measurement(obs, p), stacked_dictionary(cb, obs, p), iterations,
                     damping);
    h_p.col(p) = cb.a * est.x_hat;
  }
  return h_p;
}

CMat interpolate_freq(const CMat& h_p_hat, const std::vector<int>& v_k, int n_s) {
  if (static_cast<int>(v_k.size()) != h_p_hat.cols())
    throw std::invalid_argument("interpolate_freq: pilot count mismatch");
  for (int m : v_k)
    if (m < 1 || m > n_s) throw std::out_of_range("interpolate_freq: pilot index out of range");
  CMat h(h_p_hat.rows(), n_s);
  if (v_k.size() < 2) {
    if (v_k.empty()) throw std::invalid_argument("interpolate_freq: no pilots");
    h.colwise() = h_p_hat.col(0).eval();
    return h;
  }
  for (int m = 1; m <= n_s; ++m) {
    std::size_t hi = 0;
    while (hi < v_k.size() && v_k[hi] < m) ++hi;
    if (hi == 0) {
      h.col(m - 1) = h_p_hat.col(0);
    } else if (hi == v_k.size()) {
      h.col(m - 1) = h_p_hat.col(static_cast<Eigen::Index>(v_k.size()) - 1);
    } else {
      const int m0 = v_k[hi - 1], m1 = v_k[hi];
      const double t = static_cast<double>(m - m0) / static_cast<double>(m1 - m0);
      h.col(m - 1) = (1.0 - t) * h_p_hat.col(static_cast<Eigen::Index>(hi) - 1) +
                     t * h_p_hat.col(static_cast<Eigen::Index>(hi));
    }
  }
  return h;
}

}  // namespace lecln
