// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "lecln/nn/tape.hpp"

using namespace lecln;
using nn::Tensor;

namespace {

Tensor random_tensor(std::vector<int> dims, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(dims));
  std::normal_distribution<double> g(0.0, scale);
  for (Eigen::Index i = 0; i < t.v.size(); ++i) t.v(i) = g(rng);
  return t;
}

// Central finite difference of a scalar functional with respect to one entry.
double fd(std::function<double()> f, double& x, double h = 1e-6) {
  const double x0 = x;
  x = x0 + h;
  const double up = f();
  x = x0 - h;
  const double dn = f();
  x = x0;
  return (up - dn) / (2.0 * h);
}

}  // namespace

TEST_CASE("affine identity and pure bias") {
  nn::Tape tape;
  Tensor w = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) w.v(i * 3 + i) = 1.0;
  Tensor b = Tensor::zeros({3});
  Tensor gw = Tensor::zeros({3, 3});
  Tensor gb = Tensor::zeros({3});
  Tensor x = Tensor::zeros({3});
  x.v << 1.0, -2.0, 0.5;
  const int y = tape.affine(tape.input(x), tape.param(&w, &gw), tape.param(&b, &gb));
  CHECK((tape.value(y).v - x.v).norm() == 0.0);

  nn::Tape tape2;
  b.v << 4.0, 5.0, 6.0;
  const int y2 = tape2.affine(tape2.input(Tensor::zeros({3})), tape2.param(&w, &gw),
                              tape2.param(&b, &gb));
  CHECK((tape2.value(y2).v - b.v).norm() == 0.0);
}

TEST_CASE("affine matches a triple-loop reference") {
  Rng rng(11);
  Tensor w = random_tensor({5, 7}, rng);
  Tensor b = random_tensor({5}, rng);
  Tensor x = random_tensor({7}, rng);
  Tensor gw = Tensor::zeros({5, 7}), gb = Tensor::zeros({5});
  nn::Tape tape;
  const int y = tape.affine(tape.input(x), tape.param(&w, &gw), tape.param(&b, &gb));
  for (int o = 0; o < 5; ++o) {
    double ref = b.v(o);
    for (int i = 0; i < 7; ++i) ref += w.v(o * 7 + i) * x.v(i);
    CHECK(tape.value(y).v(o) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("conv2d pointwise identity and bias broadcast") {
  Rng rng(12);
  Tensor x = random_tensor({1, 4, 5}, rng);
  Tensor k = Tensor::zeros({1, 1, 1, 1});
  k.v(0) = 1.0;
  Tensor b = Tensor::zeros({1});
  Tensor gk = Tensor::zeros({1, 1, 1, 1}), gb = Tensor::zeros({1});
  nn::Tape tape;
  const int y = tape.conv2d(tape.input(x), tape.param(&k, &gk), tape.param(&b, &gb), 1, 0);
  CHECK(tape.value(y).dims == std::vector<int>{1, 4, 5});
  CHECK((tape.value(y).v - x.v).norm() < 1e-14);

  b.v(0) = 2.5;
  nn::Tape tape2;
  const int y2 = tape2.conv2d(tape2.input(Tensor::zeros({1, 4, 5})), tape2.param(&k, &gk),
                              tape2.param(&b, &gb), 1, 0);
  for (Eigen::Index i = 0; i < tape2.value(y2).v.size(); ++i)
    CHECK(tape2.value(y2).v(i) == doctest::Approx(2.5));
}

TEST_CASE("conv2d matches a six-loop reference") {
  Rng rng(13);
  const int ci = 3, co = 4, h = 5, w = 6, kh = 3, kw = 3;
  Tensor x = random_tensor({ci, h, w}, rng);
  Tensor k = random_tensor({co, ci, kh, kw}, rng);
  Tensor b = random_tensor({co}, rng);
  Tensor gk = Tensor::zeros(k.dims), gb = Tensor::zeros(b.dims);
  for (const auto& [stride, pad] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {1, 0}}) {
    nn::Tape tape;
    const int y = tape.conv2d(tape.input(x), tape.param(&k, &gk), tape.param(&b, &gb), stride, pad);
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    REQUIRE(tape.value(y).dims == std::vector<int>{co, oh, ow});
    for (int c = 0; c < co; ++c)
      for (int r = 0; r < oh; ++r)
        for (int s = 0; s < ow; ++s) {
          double ref = b.v(c);
          for (int ic = 0; ic < ci; ++ic)
            for (int dr = 0; dr < kh; ++dr)
              for (int ds = 0; ds < kw; ++ds) {
                const int ir = r * stride + dr - pad;
                const int is = s * stride + ds - pad;
                if (ir < 0 || ir >= h || is < 0 || is >= w) continue;
                ref += k.v(((c * ci + ic) * kh + dr) * kw + ds) * x.v((ic * h + ir) * w + is);
              }
          CHECK(tape.value(y).v((c * oh + r) * ow + s) == doctest::Approx(ref).epsilon(1e-10));
        }
  }
}

TEST_CASE("relu and sigmoid values") {
  Tensor x = Tensor::zeros({4});
  x.v << -1.0, 0.0, 2.0, -0.5;
  nn::Tape tape;
  const int xi = tape.input(x);
  const Vec r = tape.value(tape.relu(xi)).v;
  CHECK(r(0) == 0.0);
  CHECK(r(1) == 0.0);
  CHECK(r(2) == 2.0);
  CHECK(r(3) == 0.0);
  const Vec s = tape.value(tape.sigmoid(xi)).v;
  CHECK(s(1) == doctest::Approx(0.5));
  CHECK(s(2) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  for (int i = 0; i < 4; ++i) {
    CHECK(s(i) > 0.0);
    CHECK(s(i) < 1.0);
  }
}

TEST_CASE("mse value and gradient") {
  Tensor x = Tensor::zeros({2});
  x.v << 1.0, 2.0;
  Tensor target = Tensor::zeros({2});
  nn::Tape tape;
  const int xi = tape.input(x);
  const int l = tape.mse(xi, target);
  CHECK(tape.value(l).v(0) == doctest::Approx(2.5));
  tape.backward(l);
  CHECK(tape.grad(xi).v(0) == doctest::Approx(1.0));  // 2(x - t)/n
  CHECK(tape.grad(xi).v(1) == doctest::Approx(2.0));
}

TEST_CASE("backward matches finite differences through affine and relu") {
  Rng rng(14);
  Tensor w = random_tensor({4, 6}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor x = random_tensor({6}, rng);
  const Tensor target = random_tensor({4}, rng);
  // Keep pre-activations away from the relu kink.
  for (Eigen::Index i = 0; i < b.v.size(); ++i) b.v(i) += (b.v(i) >= 0.0 ? 0.5 : -0.5);

  Tensor gw = Tensor::zeros(w.dims), gb = Tensor::zeros(b.dims);
  const auto loss = [&]() {
    nn::Tape t;
    return t.value(t.mse(t.relu(t.affine(t.input(x), t.param(&w, &gw), t.param(&b, &gb))),
                         target)).v(0);
  };
  nn::Tape tape;
  const int xi = tape.input(x);
  const int l = tape.mse(tape.relu(tape.affine(xi, tape.param(&w, &gw), tape.param(&b, &gb))),
                         target);
  tape.backward(l);
  for (Eigen::Index i = 0; i < w.v.size(); ++i)
    CHECK(gw.v(i) == doctest::Approx(fd(loss, w.v(i))).epsilon(1e-5));
  for (Eigen::Index i = 0; i < b.v.size(); ++i)
    CHECK(gb.v(i) == doctest::Approx(fd(loss, b.v(i))).epsilon(1e-5));
  for (Eigen::Index i = 0; i < x.v.size(); ++i)
    CHECK(tape.grad(xi).v(i) == doctest::Approx(fd(loss, x.v(i))).epsilon(1e-5));
}

TEST_CASE("backward matches finite differences through conv, sigmoid, mul, add, concat, scale") {
  Rng rng(15);
  Tensor x = random_tensor({1, 4, 4}, rng);
  Tensor k = random_tensor({2, 1, 3, 3}, rng, 0.5);
  Tensor b = random_tensor({2}, rng, 0.5);
  Tensor gk = Tensor::zeros(k.dims), gb = Tensor::zeros(b.dims);
  const Tensor target = random_tensor({16}, rng);
  const auto build = [&](nn::Tape& t) {
    const int c = t.conv2d(t.input(x), t.param(&k, &gk), t.param(&b, &gb), 2, 1);
    const int sg = t.sigmoid(c);
    const int m = t.mul(sg, t.add(t.scale(c, 0.5), sg));
    return t.mse(t.concat(m, sg), target);
  };
  const auto loss = [&]() {
    nn::Tape t;
    return t.value(build(t)).v(0);
  };
  nn::Tape tape;
  tape.backward(build(tape));
  for (Eigen::Index i = 0; i < k.v.size(); ++i)
    CHECK(gk.v(i) == doctest::Approx(fd(loss, k.v(i))).epsilon(1e-5));
  for (Eigen::Index i = 0; i < b.v.size(); ++i)
    CHECK(gb.v(i) == doctest::Approx(fd(loss, b.v(i))).epsilon(1e-5));
}

TEST_CASE("gradients of an unused leaf stay zero") {
  Rng rng(16);
  Tensor w = random_tensor({2, 2}, rng);
  Tensor gw = Tensor::zeros({2, 2});
  Tensor x = random_tensor({2}, rng);
  nn::Tape tape;
  tape.param(&w, &gw);  // never consumed
  const int l = tape.mse(tape.input(x), Tensor::zeros({2}));
  tape.backward(l);
  CHECK(gw.v.norm() == 0.0);
}

TEST_CASE("lr schedule") {
  nn::TrainConfig cfg;
  CHECK(nn::lr_at(0, cfg) == doctest::Approx(1e-3));
  CHECK(nn::lr_at(79, cfg) == doctest::Approx(1e-3));
  CHECK(nn::lr_at(80, cfg) == doctest::Approx(3e-4));
  CHECK(nn::lr_at(150, cfg) == doctest::Approx(2.7e-5));
  CHECK(nn::lr_at(299, cfg) == doctest::Approx(8.1e-6));
  cfg.milestones = {10, 5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Vec p(3);
  p << 1.0, -2.0, 3.0;
  const Vec p0 = p;
  nn::AdamState st{Vec::Zero(3), Vec::Zero(3)};
  nn::adam_step(p, Vec::Zero(3), st, 1, 1e-3);
  CHECK((p - p0).norm() == 0.0);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  Rng rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 4;
  Vec p(n);
  for (int i = 0; i < n; ++i) p(i) = g(rng);
  Vec ref = p;
  Vec m = Vec::Zero(n), v = Vec::Zero(n);
  nn::AdamState st{Vec::Zero(n), Vec::Zero(n)};
  const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 5; ++t) {
    Vec grad(n);
    for (int i = 0; i < n; ++i) grad(i) = g(rng);
    nn::adam_step(p, grad, st, t, lr, b1, b2, eps);
    for (int i = 0; i < n; ++i) {
      m(i) = b1 * m(i) + (1.0 - b1) * grad(i);
      v(i) = b2 * v(i) + (1.0 - b2) * grad(i) * grad(i);
      const double mh = m(i) / (1.0 - std::pow(b1, t));
      const double vh = v(i) / (1.0 - std::pow(b2, t));
      ref(i) -= lr * mh / (std::sqrt(vh) + eps);
    }
    for (int i = 0; i < n; ++i) CHECK(p(i) == doctest::Approx(ref(i)).epsilon(1e-12));
  }
}
