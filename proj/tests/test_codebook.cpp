// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>

#include "doctest.h"
#include "lecln/channel.hpp"
#include "lecln/codebook.hpp"

using namespace lecln;

namespace {
constexpr double kEps32 = 2.0 * kPi / 64.0;  // epsilon for n_t = 32
}

TEST_CASE("oversampled_endpoints centered window") {
  const GridEndpoints ep = oversampled_endpoints(kPi, 13, 32);
  CHECK(ep.phi_o1 == doctest::Approx(26.0 * kEps32));
  CHECK(ep.phi_o2 == doctest::Approx(38.0 * kEps32));
  CHECK(ep.phi_o1 == doctest::Approx(2.5525).epsilon(1e-4));
  CHECK(ep.phi_o2 == doctest::Approx(3.7306).epsilon(1e-4));
  // Endpoints sit on the coarse grid and span (n_w - 1) * epsilon.
  CHECK(std::abs(ep.phi_o1 / kEps32 - std::round(ep.phi_o1 / kEps32)) < 1e-9);
  CHECK(ep.phi_o2 - ep.phi_o1 == doctest::Approx(12.0 * kEps32));
}

TEST_CASE("oversampled_endpoints clamping") {
  const GridEndpoints lo = oversampled_endpoints(0.1, 13, 32);
  CHECK(lo.phi_o1 == 0.0);
  const GridEndpoints hi = oversampled_endpoints(2.0 * kPi - 0.1, 13, 32);
  CHECK(hi.phi_o2 == doctest::Approx(63.0 * kEps32));
}

TEST_CASE("build_grid structure at the running example") {
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  CHECK(cb.epsilon == doctest::Approx(kEps32));
  CHECK(cb.epsilon_o == doctest::Approx(kEps32 / 2.0));
  CHECK(cb.n_o == 24);
  CHECK(cb.phi.size() == 64);
  CHECK(cb.epsilon_g ==
        doctest::Approx((2.0 * kPi - 24.0 * cb.epsilon_o) / (64.0 - 24.0)));
  CHECK(cb.phi(0) >= 0.0);
  CHECK(cb.phi(63) < 2.0 * kPi);
  for (int d = 1; d < 64; ++d) CHECK(cb.phi(d) > cb.phi(d - 1));
  // Over-sampled subspace: exact eps/2 spacing.
  for (int d = cb.over_begin + 1; d < cb.over_begin + cb.n_o; ++d)
    CHECK(cb.phi(d) - cb.phi(d - 1) == doctest::Approx(cb.epsilon_o));
  CHECK(cb.phi(cb.over_begin) == doctest::Approx(cb.endpoints.phi_o1));
}

TEST_CASE("build_grid with the window clamped at zero") {
  const UloDftCodebook cb = make_codebook(0.1, 64, 32);
  CHECK(cb.over_begin == 0);
  CHECK(cb.phi(0) == doctest::Approx(0.0));
  CHECK(cb.phi.size() == 64);
  for (int d = 1; d < 64; ++d) CHECK(cb.phi(d) > cb.phi(d - 1));
}

TEST_CASE("build_codebook unit-norm columns") {
  const UloDftCodebook cb = make_codebook(2.0, 64, 32);
  for (int d = 0; d < 64; ++d) {
    CHECK(cb.a.col(d).norm() == doctest::Approx(1.0));
    CHECK((cb.a.col(d) - array_response(cb.phi(d), 32)).norm() < 1e-12);
  }
}

TEST_CASE("build_codebook rejects duplicate grid values") {
  UloDftCodebook cb;
  cb.phi = Vec::Zero(4);
  cb.phi << 0.0, 1.0, 1.0, 2.0;
  CHECK_THROWS_WITH_AS(build_codebook(cb), "codebook degenerate", std::runtime_error);
}

TEST_CASE("make_codebook rejects too-small dictionaries") {
  CHECK_THROWS_WITH_AS(make_codebook(kPi, 24, 32), "codebook too small", std::runtime_error);
}

TEST_CASE("uniform full-rate grid gives an orthonormal dictionary") {
  UloDftCodebook cb;
  cb.epsilon = 2.0 * kPi / 64.0;  // fixes n_t = 32
  cb.phi = Vec::Zero(32);
  for (int d = 0; d < 32; ++d) cb.phi(d) = 2.0 * kPi * d / 32.0;
  build_codebook(cb);
  CHECK((cb.a * cb.a.adjoint() - CMat::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a_h_pinv is a left inverse of the adjoint dictionary") {
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  const CMat pinv = a_h_pinv(cb);
  REQUIRE(pinv.rows() == 32);
  REQUIRE(pinv.cols() == 64);
  CHECK((pinv * cb.a.adjoint() - CMat::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("project_block maps zero to zero and localizes on-grid angles") {
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  const CMat f = CMat::Identity(32, 32);
  const std::vector<double> zero = project_block(cb, f, CMat::Zero(32, 2));
  REQUIRE(zero.size() == 2u * 64u * 2u);
  for (double v : zero) CHECK(v == 0.0);

  for (int d : {cb.over_begin + 1, cb.over_begin + 10, 5}) {
    const CMat y = cb.a.col(d);  // noiseless measurement of one grid angle
    const std::vector<double> t = project_block(cb, f, y);
    int best = 0;
    double best_mag = -1.0;
    for (int i = 0; i < 64; ++i) {
      const double mag = std::hypot(t[i], t[64 + i]);
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    CHECK(best == d);
  }
}

TEST_CASE("project_observation localizes a noiseless on-grid path") {
  SystemConfig sys;
  const int n_p = 16;
  const UloDftCodebook cb = make_codebook(kPi, 64, 32);
  const int d_true = cb.over_begin + 7;
  // Flat channel: same steering vector on every subcarrier.
  CMat h(32, 8);
  for (int p = 0; p < 8; ++p) h.col(p) = cb.a.col(d_true);
  const PilotPlan plan = make_pilot_plan(1, sys, 8, n_p);
  const PilotObservation obs = observe_pilots(h, plan, sys, 0.0, 21);
  const ProjectedMeasurement pm = project_observation(cb, obs);
  REQUIRE(pm.x_angular.rows() == 64);
  REQUIRE(pm.x_angular.cols() == 8);
  REQUIRE(pm.y_tilde.cols() == n_p);
  REQUIRE(pm.tensor.size() == 2u * 64u * 8u);
  for (int p = 0; p < 8; ++p) {
    int best = 0;
    pm.x_angular.col(p).cwiseAbs().maxCoeff(&best);
    CHECK(best == d_true);
  }
  // The tensor is the re/im split of the window-aligned isometric transform
  // of the recovered channel; noiselessly that channel is exact.
  const CMat t = angular_isometry(cb);
  CHECK((t.adjoint() * t - CMat::Identity(32, 32)).norm() < 1e-8);
  const CMat aligned = window_align(cb, t * h);
  CHECK((window_unalign(cb, aligned) - t * h).norm() == 0.0);
  for (int d = 0; d < 64; ++d)
    for (int p = 0; p < 8; ++p) {
      CHECK(pm.tensor[d * 8 + p] == doctest::Approx(aligned(d, p).real()));
      CHECK(pm.tensor[64 * 8 + d * 8 + p] == doctest::Approx(aligned(d, p).imag()));
    }
}
