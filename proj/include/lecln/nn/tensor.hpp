// SPDX-License-Identifier: Apache-2.0

#ifndef LECLN_NN_TENSOR_HPP
#define LECLN_NN_TENSOR_HPP

#include <numeric>
#include <vector>

#include "lecln/types.hpp"

namespace lecln::nn {

// Dense row-major tensor backed by a flat Eigen vector.
struct Tensor {
  std::vector<int> dims;
  Vec v;

  Tensor() = default;
  Tensor(std::vector<int> d, Vec values) : dims(std::move(d)), v(std::move(values)) {
    if (v.size() != size()) throw std::invalid_argument("Tensor: value count != product of dims");
  }

  static Tensor zeros(std::vector<int> d) {
    Tensor t;
    t.dims = std::move(d);
    t.v = Vec::Zero(t.size());
    return t;
  }

  Eigen::Index size() const {
    long long p = 1;
    for (int d : dims) p *= d;
    return static_cast<Eigen::Index>(p);
  }
};

struct TrainConfig {
  int batch_size = 32;
  double lr0 = 1e-3;
  std::vector<int> milestones{80, 120, 150, 180};
  double decay = 0.3;
  int epochs = 300;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    for (std::size_t i = 0; i + 1 < milestones.size(); ++i)
      if (milestones[i] >= milestones[i + 1])
        throw std::invalid_argument("TrainConfig: milestones must be strictly increasing");
    if (!milestones.empty() && milestones.back() >= epochs)
      throw std::invalid_argument("TrainConfig: milestones must be < epochs");
  }
};

// lr0 * decay^(number of milestones <= epoch), epoch 0-based.
inline double lr_at(int epoch, const TrainConfig& cfg) {
  int passed = 0;
  for (int m : cfg.milestones)
    if (m <= epoch) ++passed;
  double lr = cfg.lr0;
  for (int i = 0; i < passed; ++i) lr *= cfg.decay;
  return lr;
}

struct AdamState {
  Vec m;
  Vec v;
};

// Bias-corrected Adam update, t >= 1.
void adam_step(Vec& param, const Vec& grad, AdamState& state, int t, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Raises the glibc mmap/trim thresholds so per-sample graph buffers are
// recycled on the heap. No-op elsewhere; safe to call repeatedly.
void tune_allocator();

}  // namespace lecln::nn

#endif  // LECLN_NN_TENSOR_HPP
