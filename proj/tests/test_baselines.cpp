// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "lecln/baselines.hpp"
#include "lecln/channel.hpp"

using namespace lecln;

namespace {

CMat random_cmat(int rows, int cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cplx(g(rng), g(rng));
  return m;
}

CMat normalized_dictionary(int rows, int cols, Rng& rng) {
  CMat d = random_cmat(rows, cols, rng);
  for (int c = 0; c < cols; ++c) d.col(c) /= d.col(c).norm();
  return d;
}

double rel_err(const CMat& est, const CMat& truth) {
  return (est - truth).norm() / truth.norm();
}

}  // namespace

TEST_CASE("ls_single recovers the channel with a square invertible precoder") {
  Rng rng(1);
  const CMat f = random_cmat(6, 6, rng) + 3.0 * CMat::Identity(6, 6);
  const CMat h = random_cmat(6, 4, rng);
  const CMat s = CMat::Identity(4, 4);
  const CMat y = f.adjoint() * h * s;
  CHECK(rel_err(ls_single(y, f, s), h) < 1e-9);
}

TEST_CASE("ls_pilot_estimate noiseless exact recovery") {
  SystemConfig sys;
  sys.n_t = 8;
  sys.n_rf = 2;
  Rng rng(2);
  const CMat h = random_cmat(8, 4, rng);
  const PilotPlan plan = make_pilot_plan(1, sys, 4, 8);  // 16 stacked rows >= 8
  const PilotObservation obs = observe_pilots(h, plan, sys, 0.0, 3);
  bool under = true;
  const CMat est = ls_pilot_estimate(obs, &under);
  CHECK_FALSE(under);
  CHECK(rel_err(est, h) < 1e-9);
}

TEST_CASE("ls_pilot_estimate flags an underdetermined system") {
  SystemConfig sys;
  sys.n_t = 8;
  sys.n_rf = 2;
  Rng rng(4);
  const CMat h = random_cmat(8, 2, rng);
  const PilotPlan plan = make_pilot_plan(1, sys, 2, 2);  // 4 stacked rows < 8
  const PilotObservation obs = observe_pilots(h, plan, sys, 0.0, 5);
  bool under = false;
  ls_pilot_estimate(obs, &under);
  CHECK(under);
}

TEST_CASE("ls error scales linearly with the noise power") {
  SystemConfig sys;
  sys.n_t = 8;
  sys.n_rf = 2;
  Rng rng(6);
  const CMat h = random_cmat(8, 4, rng);
  const PilotPlan plan = make_pilot_plan(1, sys, 4, 16);
  auto mean_nmse = [&](double sigma2) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      const PilotObservation obs = observe_pilots(h, plan, sys, sigma2, 100 + seed);
      const CMat est = ls_pilot_estimate(obs);
      acc += (est - h).squaredNorm() / h.squaredNorm();
    }
    return acc / 60.0;
  };
  const double lo = mean_nmse(0.01);
  const double hi = mean_nmse(0.1);
  CHECK(hi / lo == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("omp recovers a single atom exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const CMat dict = normalized_dictionary(16, 40, rng);
    const int j = trial % 40;
    const cplx c(0.5 + trial * 0.01, -0.3);
    const SparseEstimate est = omp_estimate(c * dict.col(j), dict, 1);
    REQUIRE(est.support.size() == 1);
    CHECK(est.support[0] == j);
    CHECK(std::abs(est.x_hat(j) - c) < 1e-10);
    CHECK(est.residual_norm < 1e-10);
  }
}

TEST_CASE("omp recovers a sparse combination over an orthonormal dictionary") {
  const int n = 16;
  CMat dict(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      dict(r, c) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * kPi * r * c / n);
  CVec x0 = CVec::Zero(n);
  x0(2) = cplx(1.0, 0.5);
  x0(7) = cplx(-0.8, 0.1);
  x0(11) = cplx(0.2, -0.9);
  const SparseEstimate est = omp_estimate(dict * x0, dict, 3);
  CHECK((est.x_hat - x0).norm() < 1e-10);
  const std::set<int> sup(est.support.begin(), est.support.end());
  CHECK(sup == std::set<int>{2, 7, 11});
}

TEST_CASE("omp zero measurement and residual monotonicity") {
  Rng rng(8);
  const CMat dict = normalized_dictionary(12, 30, rng);
  const SparseEstimate zero = omp_estimate(CVec::Zero(12), dict, 4);
  CHECK(zero.support.empty());
  CHECK(zero.x_hat.norm() == 0.0);

  const CVec y = random_cmat(12, 1, rng).col(0);
  double prev = y.norm();
  for (int k = 1; k <= 6; ++k) {
    const SparseEstimate est = omp_estimate(y, dict, k);
    CHECK(est.residual_norm <= prev + 1e-12);
    prev = est.residual_norm;
    const std::set<int> sup(est.support.begin(), est.support.end());
    CHECK(sup.size() == est.support.size());  // no repeated atoms
  }
}

TEST_CASE("amp zero measurement") {
  Rng rng(9);
  const CMat dict = normalized_dictionary(16, 24, rng);
  const AmpResult res = amp_estimate(CVec::Zero(16), dict);
  CHECK(res.x_hat.norm() == 0.0);
  CHECK_FALSE(res.diverged);
}

TEST_CASE("amp denoises a sparse vector from oversampled measurements") {
  Rng rng(10);
  const CMat dict = normalized_dictionary(64, 32, rng);
  CVec x0 = CVec::Zero(32);
  x0(4) = cplx(1.2, -0.4);
  x0(19) = cplx(-0.7, 0.9);
  const AmpResult res = amp_estimate(dict * x0, dict);
  CHECK_FALSE(res.diverged);
  CHECK((res.x_hat - x0).norm() / x0.norm() < 0.1);
  // Reported residual matches a direct recomputation.
  CHECK(res.residual_norm ==
        doctest::Approx((dict * x0 - dict * res.x_hat).norm()).epsilon(1e-8));
}

TEST_CASE("amp damping keeps a coherent instance stable") {
  Rng rng(11);
  CMat dict = normalized_dictionary(16, 48, rng);
  // Make columns strongly correlated to stress the iteration.
  const CVec common = random_cmat(16, 1, rng).col(0).normalized();
  for (int c = 0; c < 48; ++c) dict.col(c) = (0.9 * common + 0.1 * dict.col(c)).normalized();
  CVec x0 = CVec::Zero(48);
  x0(3) = cplx(1.0, 0.0);
  const CVec y = dict * x0;
  const AmpResult damped = amp_estimate(y, dict, 30, 0.7);
  const AmpResult plain = amp_estimate(y, dict, 30, 1.0);
  CHECK(damped.residual_norm <= plain.residual_norm + 1e-9);
  for (Eigen::Index i = 0; i < damped.x_hat.size(); ++i)
    CHECK(std::isfinite(std::abs(damped.x_hat(i))));
}

TEST_CASE("omp_pilot_estimate recovers an on-grid two-path channel") {
  SystemConfig sys;
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  CVec x = CVec::Zero(64);
  x(cb.over_begin + 4) = cplx(1.0, 0.2);
  x(cb.over_begin + 15) = cplx(-0.4, 0.7);
  const CVec h_col = cb.a * x;
  CMat h(32, 8);
  for (int p = 0; p < 8; ++p) h.col(p) = h_col;  // flat across subcarriers
  const PilotPlan plan = make_pilot_plan(1, sys, 8, 16);
  const PilotObservation obs = observe_pilots(h, plan, sys, 0.0, 12);
  const CMat est = omp_pilot_estimate(cb, obs, 2);
  CHECK(rel_err(est, h) < 1e-6);
}

TEST_CASE("amp_pilot_estimate produces a finite estimate of the right shape") {
  SystemConfig sys;
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  CMat h(32, 8);
  for (int p = 0; p < 8; ++p) h.col(p) = cb.a.col(cb.over_begin + 4);
  const PilotPlan plan = make_pilot_plan(1, sys, 8, 16);
  const PilotObservation obs = observe_pilots(h, plan, sys, 0.0, 13);
  const CMat est = amp_pilot_estimate(cb, obs);
  REQUIRE(est.rows() == 32);
  REQUIRE(est.cols() == 8);
  CHECK(est.allFinite());
}

TEST_CASE("interpolate_freq flat and linear channels are exact") {
  Rng rng(14);
  const CMat col = random_cmat(4, 1, rng);
  CMat flat(4, 2);
  flat << col, col;
  const CMat f = interpolate_freq(flat, {1, 9}, 16);
  REQUIRE(f.cols() == 16);
  for (int m = 0; m < 16; ++m) CHECK((f.col(m) - col).norm() < 1e-12);

  // Values linear in the subcarrier index are reproduced inside the span.
  const CMat a = random_cmat(4, 1, rng), b = random_cmat(4, 1, rng);
  CMat pilots(4, 3);
  const std::vector<int> v_k = {1, 5, 9};
  for (int j = 0; j < 3; ++j) pilots.col(j) = a + double(v_k[static_cast<std::size_t>(j)]) * b;
  const CMat g = interpolate_freq(pilots, v_k, 12);
  for (int m = 1; m <= 9; ++m) CHECK((g.col(m - 1) - (a + double(m) * b)).norm() < 1e-10);
  // Edges hold the nearest pilot.
  for (int m = 10; m <= 12; ++m) CHECK((g.col(m - 1) - g.col(8)).norm() < 1e-12);
}

TEST_CASE("interpolate_freq replication and bounds") {
  Rng rng(15);
  const CMat col = random_cmat(3, 1, rng);
  const CMat r = interpolate_freq(col, {5}, 8);
  for (int m = 0; m < 8; ++m) CHECK((r.col(m) - col).norm() == 0.0);
  CHECK_THROWS_AS(interpolate_freq(col, {0}, 8), std::out_of_range);
  CHECK_THROWS_AS(interpolate_freq(col, {9}, 8), std::out_of_range);
}

TEST_CASE("interpolation error on a frequency-selective channel is nonzero") {
  SystemConfig sys;
  sys.n_t = 4;
  sys.n_s = 16;
  const std::vector<ChannelPath> paths = {{1.0, 0.8, 0.0, 0.1}, {0.6, 2.4, 2.0, 1.3}};
  const CMat h = assemble_wideband(paths, sys).H;
  const std::vector<int> v_k = {1, 5, 9, 13};
  CMat hp(4, 4);
  for (int j = 0; j < 4; ++j) hp.col(j) = h.col(v_k[static_cast<std::size_t>(j)] - 1);
  const CMat est = interpolate_freq(hp, v_k, 16);
  CHECK((est - h).norm() > 1e-3);           // tau = 2 bends the frequency response
  CHECK((est - h).norm() / h.norm() < 1.0);  // but interpolation is still informative
}
