// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode tape: dense/conv transforms, ReLU/Sigmoid, concat,
// elementwise product, and mean-squared-error loss. One tape per sample
// graph; parameter gradients accumulate into externally owned sinks.

#ifndef LECLN_NN_TAPE_HPP
#define LECLN_NN_TAPE_HPP

#include <functional>

#include "lecln/nn/tensor.hpp"

namespace lecln::nn {

class Tape {
 public:
  // Leaf holding a copy of t; gradient retrievable via grad().
  int input(Tensor t);
  // Leaf bound to external parameter storage; backward() adds into *grad_sink.
  int param(const Tensor* value, Tensor* grad_sink);

  // W (out x in) stored row-major as dims {out, in}; b dims {out}; x dims {in}.
  int affine(int x, int w, int b);
  // x dims {C,H,W}; kernels dims {Cout, Cin, kh, kw}; bias dims {Cout}.
  int conv2d(int x, int kernels, int bias, int stride, int pad);
  int relu(int x);
  int sigmoid(int x);
  int concat(int a, int b);  // 1-D concatenation
  int mul(int a, int b);     // elementwise, same shape
  int add(int a, int b);     // elementwise sum, same total size; dims of a
  int scale(int a, double s);
  int mse(int pred, const Tensor& target);  // scalar node

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
  const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  // Reverse accumulation from a scalar loss node.
  void backward(int loss_id);

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void()> back;  // empty for leaves
    Tensor* sink = nullptr;      // parameter leaves
  };
  int push(Tensor val, std::function<void()> back = {});
  std::vector<Node> nodes_;
};

}  // namespace lecln::nn

#endif  // LECLN_NN_TAPE_HPP
