// SPDX-License-Identifier: Apache-2.0

#include "lecln/nn/tape.hpp"

#include <cmath>
#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

namespace lecln::nn {

void tune_allocator() {
#if defined(__GLIBC__) || defined(__linux__)
  // Keep large graph buffers on the heap instead of per-call mmap/munmap;
  // the tape allocates and frees megabyte-sized blocks every sample.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

void adam_step(Vec& param, const Vec& grad, AdamState& state, int t, double lr,
               double beta1, double beta2, double eps) {
  if (t < 1) throw std::invalid_argument("adam_step: t >= 1");
  if (state.m.size() != param.size()) {
    state.m = Vec::Zero(param.size());
    state.v = Vec::Zero(param.size());
  }
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  param.array() -= lr * (state.m.array() / bc1) /
                   ((state.v.array() / bc2).sqrt() + eps);
}

int Tape::push(Tensor val, std::function<void()> back) {
  if (nodes_.empty()) nodes_.reserve(64);
  Node n;
  n.grad = Tensor::zeros(val.dims);
  n.val = std::move(val);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Tensor t) { return push(std::move(t)); }

int Tape::param(const Tensor* value, Tensor* grad_sink) {
  const int id = push(*value);
  nodes_[static_cast<std::size_t>(id)].sink = grad_sink;
  return id;
}

int Tape::affine(int x, int w, int b) {
  const Tensor& xt = value(x);
  const Tensor& wt = value(w);
  const Tensor& bt = value(b);
  if (wt.dims.size() != 2 || wt.dims[1] != xt.v.size() || bt.v.size() != wt.dims[0])
    throw std::invalid_argument("affine: shape mismatch");
  const int rows = wt.dims[0], cols = wt.dims[1];
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> wm(wt.v.data(), rows, cols);
  Tensor out({rows}, wm * xt.v + bt.v);
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, x, w, b, rows, cols] {
    const Vec& g = nodes_[static_cast<std::size_t>(id)].grad.v;
    Eigen::Map<const RowMat> wm2(nodes_[static_cast<std::size_t>(w)].val.v.data(), rows, cols);
    Eigen::Map<RowMat> gw(nodes_[static_cast<std::size_t>(w)].grad.v.data(), rows, cols);
    gw.noalias() += g * nodes_[static_cast<std::size_t>(x)].val.v.transpose();
    nodes_[static_cast<std::size_t>(b)].grad.v += g;
    nodes_[static_cast<std::size_t>(x)].grad.v.noalias() += wm2.transpose() * g;
  };
  return id;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvDims {
  int c_in, h, w, c_out, kh, kw, h_out, w_out, stride, pad;
};

// Gather x (C,H,W) into columns (C*kh*kw) x (h_out*w_out).
RowMat im2col(const Vec& x, const ConvDims& d) {
  RowMat p = RowMat::Zero(d.c_in * d.kh * d.kw, d.h_out * d.w_out);
  for (int c = 0; c < d.c_in; ++c)
    for (int ki = 0; ki < d.kh; ++ki)
      for (int kj = 0; kj < d.kw; ++kj) {
        const int prow = (c * d.kh + ki) * d.kw + kj;
        for (int oy = 0; oy < d.h_out; ++oy) {
          const int iy = oy * d.stride + ki - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          for (int ox = 0; ox < d.w_out; ++ox) {
            const int ix = ox * d.stride + kj - d.pad;
            if (ix < 0 || ix >= d.w) continue;
            p(prow, oy * d.w_out + ox) = x((c * d.h + iy) * d.w + ix);
          }
        }
      }
  return p;
}

void col2im_add(const RowMat& p, const ConvDims& d, Vec& gx) {
  for (int c = 0; c < d.c_in; ++c)
    for (int ki = 0; ki < d.kh; ++ki)
      for (int kj = 0; kj < d.kw; ++kj) {
        const int prow = (c * d.kh + ki) * d.kw + kj;
        for (int oy = 0; oy < d.h_out; ++oy) {
          const int iy = oy * d.stride + ki - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          for (int ox = 0; ox < d.w_out; ++ox) {
            const int ix = ox * d.stride + kj - d.pad;
            if (ix < 0 || ix >= d.w) continue;
            gx((c * d.h + iy) * d.w + ix) += p(prow, oy * d.w_out + ox);
          }
        }
      }
}

}  // namespace

int Tape::conv2d(int x, int kernels, int bias, int stride, int pad) {
  const Tensor& xt = value(x);
  const Tensor& kt = value(kernels);
  const Tensor& bt = value(bias);
  if (xt.dims.size() != 3 || kt.dims.size() != 4) throw std::invalid_argument("conv2d: rank");
  ConvDims d;
  d.c_in = xt.dims[0];
  d.h = xt.dims[1];
  d.w = xt.dims[2];
  d.c_out = kt.dims[0];
  d.kh = kt.dims[2];
  d.kw = kt.dims[3];
  d.stride = stride;
  d.pad = pad;
  if (kt.dims[1] != d.c_in) throw std::invalid_argument("conv2d: channel mismatch");
  if (bt.v.size() != d.c_out) throw std::invalid_argument("conv2d: bias size");
  d.h_out = (d.h + 2 * pad - d.kh) / stride + 1;
  d.w_out = (d.w + 2 * pad - d.kw) / stride + 1;
  if (d.h_out <= 0 || d.w_out <= 0) throw std::invalid_argument("conv2d: non-positive output dims");

  RowMat p = im2col(xt.v, d);
  Eigen::Map<const RowMat> km(kt.v.data(), d.c_out, d.c_in * d.kh * d.kw);
  RowMat y = km * p;
  y.colwise() += Eigen::Map<const Vec>(bt.v.data(), d.c_out);

  Tensor out({d.c_out, d.h_out, d.w_out}, Eigen::Map<const Vec>(y.data(), y.size()));
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, x, kernels, bias, d,
                                               p = std::move(p)] {
    Eigen::Map<const RowMat> gy(nodes_[static_cast<std::size_t>(id)].grad.v.data(), d.c_out,
                                d.h_out * d.w_out);
    Eigen::Map<RowMat> gk(nodes_[static_cast<std::size_t>(kernels)].grad.v.data(), d.c_out,
                          d.c_in * d.kh * d.kw);
    gk.noalias() += gy * p.transpose();
    nodes_[static_cast<std::size_t>(bias)].grad.v += gy.rowwise().sum();
    Eigen::Map<const RowMat> km2(nodes_[static_cast<std::size_t>(kernels)].val.v.data(), d.c_out,
                                 d.c_in * d.kh * d.kw);
    const RowMat gp = km2.transpose() * gy;
    col2im_add(gp, d, nodes_[static_cast<std::size_t>(x)].grad.v);
  };
  return id;
}

int Tape::relu(int x) {
  const Tensor& xt = value(x);
  Tensor out(xt.dims, xt.v.cwiseMax(0.0));
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, x] {
    const Vec& xv = nodes_[static_cast<std::size_t>(x)].val.v;
    nodes_[static_cast<std::size_t>(x)].grad.v.array() +=
        nodes_[static_cast<std::size_t>(id)].grad.v.array() * (xv.array() > 0.0).cast<double>();
  };
  return id;
}

int Tape::sigmoid(int x) {
  const Tensor& xt = value(x);
  Tensor out(xt.dims, (1.0 / (1.0 + (-xt.v.array()).exp())).matrix());
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, x] {
    const Vec& s = nodes_[static_cast<std::size_t>(id)].val.v;
    nodes_[static_cast<std::size_t>(x)].grad.v.array() +=
        nodes_[static_cast<std::size_t>(id)].grad.v.array() * s.array() * (1.0 - s.array());
  };
  return id;
}

int Tape::concat(int a, int b) {
  const Tensor& at = value(a);
  const Tensor& bt = value(b);
  Vec v(at.v.size() + bt.v.size());
  v << at.v, bt.v;
  const int n = static_cast<int>(v.size());
  Tensor out({n}, std::move(v));
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, a, b] {
    const Vec& g = nodes_[static_cast<std::size_t>(id)].grad.v;
    Node& na = nodes_[static_cast<std::size_t>(a)];
    Node& nb = nodes_[static_cast<std::size_t>(b)];
    na.grad.v += g.head(na.grad.v.size());
    nb.grad.v += g.tail(nb.grad.v.size());
  };
  return id;
}

int Tape::mul(int a, int b) {
  const Tensor& at = value(a);
  const Tensor& bt = value(b);
  if (at.v.size() != bt.v.size()) throw std::invalid_argument("mul: shape mismatch");
  Tensor out(at.dims, at.v.cwiseProduct(bt.v));
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, a, b] {
    const Vec& g = nodes_[static_cast<std::size_t>(id)].grad.v;
    nodes_[static_cast<std::size_t>(a)].grad.v.array() +=
        g.array() * nodes_[static_cast<std::size_t>(b)].val.v.array();
    nodes_[static_cast<std::size_t>(b)].grad.v.array() +=
        g.array() * nodes_[static_cast<std::size_t>(a)].val.v.array();
  };
  return id;
}

int Tape::add(int a, int b) {
  const Tensor& at = value(a);
  const Tensor& bt = value(b);
  if (at.v.size() != bt.v.size()) throw std::invalid_argument("add: shape mismatch");
  Tensor out(at.dims, at.v + bt.v);
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, a, b] {
    const Vec& g = nodes_[static_cast<std::size_t>(id)].grad.v;
    nodes_[static_cast<std::size_t>(a)].grad.v += g;
    nodes_[static_cast<std::size_t>(b)].grad.v += g;
  };
  return id;
}

int Tape::scale(int a, double s) {
  const Tensor& at = value(a);
  Tensor out(at.dims, s * at.v);
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, a, s] {
    nodes_[static_cast<std::size_t>(a)].grad.v += s * nodes_[static_cast<std::size_t>(id)].grad.v;
  };
  return id;
}

int Tape::mse(int pred, const Tensor& target) {
  const Tensor& pt = value(pred);
  if (pt.v.size() != target.v.size()) throw std::invalid_argument("mse: shape mismatch");
  const Vec diff = pt.v - target.v;
  Tensor out({1}, Vec::Constant(1, diff.squaredNorm() / static_cast<double>(diff.size())));
  const int id = push(std::move(out));
  nodes_[static_cast<std::size_t>(id)].back = [this, id, pred, diff] {
    const double g = nodes_[static_cast<std::size_t>(id)].grad.v(0);
    nodes_[static_cast<std::size_t>(pred)].grad.v +=
        (2.0 * g / static_cast<double>(diff.size())) * diff;
  };
  return id;
}

void Tape::backward(int loss_id) {
  Node& loss = nodes_[static_cast<std::size_t>(loss_id)];
  if (loss.val.v.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  loss.grad.v(0) = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back) n.back();
    if (n.sink) n.sink->v += n.grad.v;
  }
}

}  // namespace lecln::nn
