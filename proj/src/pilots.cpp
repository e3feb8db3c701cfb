// SPDX-License-Identifier: Apache-2.0

#include "lecln/pilots.hpp"

#include <cmath>

namespace lecln {

std::vector<int> pilot_subcarriers(int user, int n_s, int k_p, int k_users) {
  if (k_users * k_p > n_s) throw std::runtime_error("pilot plan infeasible");
  if (user < 1 || user > k_users) throw std::invalid_argument("pilot_subcarriers: user index");
  const int delta_v = n_s / k_p;
  std::vector<int> v(k_p);
  for (int i = 0; i < k_p; ++i) v[i] = user + i * delta_v;
  return v;
}

PilotPlan make_pilot_plan(int user, const SystemConfig& cfg, int k_p, int n_p) {
  PilotPlan plan;
  plan.k_p = k_p;
  plan.n_p = n_p;
  plan.delta_v = cfg.n_s / k_p;
  plan.v_k = pilot_subcarriers(user, cfg.n_s, k_p, cfg.n_users);
  if (n_p % k_p != 0) throw std::invalid_argument("make_pilot_plan: require k_p | n_p");
  return plan;
}

AnalogPrecoder make_precoder(const SystemConfig& cfg, std::uint64_t seed) {
  if (cfg.ps_bits < 1) throw std::invalid_argument("make_precoder: bits >= 1");
  const int q = 1 << cfg.ps_bits;
  Rng rng(seed);
  AnalogPrecoder pre;
  pre.bits = cfg.ps_bits;
  pre.seed = seed;
  pre.f_r.resize(cfg.n_t, cfg.n_rf);
  for (Eigen::Index j = 0; j < pre.f_r.cols(); ++j)
    for (Eigen::Index i = 0; i < pre.f_r.rows(); ++i) {
      const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(q));
      pre.f_r(i, j) = std::polar(1.0, 2.0 * kPi * n / q);
    }
  return pre;
}

CMat pilot_symbols(int k_p, int n_p) {
  if (n_p % k_p != 0) throw std::invalid_argument("pilot_symbols: require k_p | n_p");
  CMat dft(k_p, k_p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k_p));
  for (int r = 0; r < k_p; ++r)
    for (int c = 0; c < k_p; ++c) dft(r, c) = std::polar(scale, -2.0 * kPi * r * c / k_p);
  CMat s(k_p, n_p);
  const double energy = std::sqrt(static_cast<double>(k_p) / n_p);
  for (int b = 0; b < n_p / k_p; ++b) s.middleCols(b * k_p, k_p) = energy * dft;
  return s;
}

namespace {

CMat complex_gaussian(Eigen::Index rows, Eigen::Index cols, double sigma2, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
  CMat n(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) n(r, c) = cplx(gauss(rng), gauss(rng));
  return n;
}

}  // namespace

CMat transmit_pilots(const CMat& h_p, const CMat& s_p, const CMat& f_r, double sigma2,
                     std::uint64_t seed) {
  if (h_p.cols() != s_p.rows() || f_r.rows() != h_p.rows())
    throw std::invalid_argument("transmit_pilots: shape mismatch");
  if (sigma2 < 0.0) throw std::invalid_argument("transmit_pilots: sigma2 >= 0");
  Rng rng(seed);
  CMat y = f_r.adjoint() * h_p * s_p;
  if (sigma2 > 0.0) y += f_r.adjoint() * complex_gaussian(h_p.rows(), s_p.cols(), sigma2, rng);
  return y;
}

PilotObservation observe_pilots(const CMat& h_p, const PilotPlan& plan, const SystemConfig& cfg,
                                double sigma2, std::uint64_t seed) {
  if (h_p.cols() != plan.k_p) throw std::invalid_argument("observe_pilots: h_p columns != k_p");
  if (sigma2 < 0.0) throw std::invalid_argument("observe_pilots: sigma2 >= 0");
  PilotObservation obs;
  obs.plan = plan;
  obs.sigma2 = sigma2;
  obs.s = pilot_symbols(plan.k_p, plan.n_p);
  // Precoder seeds and noise use separate streams so the drawn precoders do
  // not depend on sigma2 (SNR calibration reruns the same seed with sigma2=0).
  Rng prng(seed);
  Rng nrng(seed ^ 0xa02bdbf7bb3c0a7ULL);
  obs.y.reserve(plan.n_p);
  obs.f.reserve(plan.n_p);
  for (int n = 0; n < plan.n_p; ++n) {
    AnalogPrecoder pre = make_precoder(cfg, prng());
    CMat yn = pre.f_r.adjoint() * h_p * obs.s.col(n).asDiagonal();
    if (sigma2 > 0.0)
      yn += pre.f_r.adjoint() * complex_gaussian(h_p.rows(), h_p.cols(), sigma2, nrng);
    obs.y.push_back(std::move(yn));
    obs.f.push_back(std::move(pre));
  }
  return obs;
}

CMat stacked_precoder(const PilotObservation& obs) {
  if (obs.f.empty()) throw std::invalid_argument("stacked_precoder: empty observation");
  const Eigen::Index n_t = obs.f.front().f_r.rows();
  const Eigen::Index n_rf = obs.f.front().f_r.cols();
  CMat f(n_t, n_rf * static_cast<Eigen::Index>(obs.f.size()));
  for (std::size_t n = 0; n < obs.f.size(); ++n)
    f.middleCols(static_cast<Eigen::Index>(n) * n_rf, n_rf) = obs.f[n].f_r;
  return f;
}

double measure_snr_db(const CMat& f_r, const CMat& h, double sigma2) {
  if (sigma2 <= 0.0) throw std::runtime_error("infinite SNR");
  const double num = (f_r.adjoint() * h).squaredNorm();
  const double den = sigma2 * f_r.squaredNorm();
  return 10.0 * std::log10(num / den);
}

double sigma2_for_snr(const CMat& f_r, const CMat& h, double snr_db) {
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  return (f_r.adjoint() * h).squaredNorm() / (snr_lin * f_r.squaredNorm());
}

}  // namespace lecln
