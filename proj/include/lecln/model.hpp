// SPDX-License-Identifier: Apache-2.0
//
// The LE-CLN model: pilot and LiDAR feature CNNs, adaptive feature weight
// control, pilot-position channel reconstruction, zero padding, the CSI
// interpolation CNN, and the two independent training stages.

#ifndef LECLN_MODEL_HPP
#define LECLN_MODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "lecln/nn/tape.hpp"
#include "lecln/types.hpp"

namespace lecln {

// Shape parameters for the networks. Defaults match the pipeline; tests use
// miniature instances for gradient checks.
struct ModelDims {
  int d = 64;         // codebook resolution
  int n_p = 8;        // pilot symbols (measurement budget)
  int n_t = 32;
  int k_p = 8;
  int n_s = 64;
  int feat = 256;     // F, per-branch feature length
  int crop_h = 64;
  int crop_w = 128;
  int afwc_hidden = 128;
  int mlp_hidden = 1024;

  void validate() const;
  int pcf_flat() const;  // flattened size after the PCF convs
  int lcf_flat() const;  // flattened size after the LCF convs
};

// Named parameter tensors with matching gradient sinks and Adam state.
class ParamStore {
 public:
  nn::Tensor& add(const std::string& name, std::vector<int> dims, Rng& rng);
  nn::Tensor& value(const std::string& name);
  const nn::Tensor& value(const std::string& name) const;
  nn::Tensor& grad(const std::string& name);
  void zero_grads();
  void scale_grads(double s);
  // One Adam step over every parameter; t is the shared step counter (>= 1).
  void adam_update(int t, double lr, const nn::TrainConfig& cfg);

  std::size_t parameter_count() const;
  const std::map<std::string, nn::Tensor>& all() const { return params_; }

  // Checkpoint: one tensor file per parameter plus a JSON manifest.
  void save(const std::string& dir, int epoch, const std::string& config_hash) const;
  // Loads values for already-declared parameters; shapes must match.
  // Returns the manifest epoch. A non-empty config_hash must match the saved one.
  int load(const std::string& dir, const std::string& config_hash = "");

 private:
  std::map<std::string, nn::Tensor> params_;
  std::map<std::string, nn::Tensor> grads_;
  std::map<std::string, nn::AdamState> adam_;
};

enum class Variant { Full, UniPilot, LidarOnly, NoAfwc };

std::string variant_name(Variant v);

struct StageAOutput {
  int out = -1;          // 2*d*k_p prediction node (angular domain)
  int weight = -1;       // 2F AFWC weight node, -1 when the variant bypasses it
  double pilot_weight_mean = 0.0;  // mean of the q_P half of the weight vector
};

// Stage-A block: PCF-CNN + LCF-CNN + AFWC + MLP_P.
class StageAModel {
 public:
  StageAModel(const ModelDims& dims, Variant variant, std::uint64_t init_seed);

  const ModelDims& dims() const { return dims_; }
  Variant variant() const { return variant_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // pilot dims {2, d, k_p}; crop dims {3, crop_h, crop_w}.
  StageAOutput forward(nn::Tape& tape, const nn::Tensor& pilot, const nn::Tensor& crop);

  // Prediction reshaped to a complex d x k_p angular-domain matrix (planes
  // re, im). The model regresses the channel on the same per-sample angle
  // grid as its input tensor, which keeps the mapping independent of the
  // grid itself; the antenna-domain channel is recovered deterministically
  // with the codebook pseudo-inverse by the caller.
  CMat estimate(const nn::Tensor& pilot, const nn::Tensor& crop,
                double* pilot_weight_mean = nullptr);

 private:
  ModelDims dims_;
  Variant variant_;
  ParamStore params_;
};

// Stage-B block: six-layer CSI interpolation CNN over {re, im, phase} planes.
class CiCnnModel {
 public:
  CiCnnModel(const ModelDims& dims, std::uint64_t init_seed);

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // input dims {3, n_t, n_s}; output node dims {2, n_t, n_s}.
  int forward(nn::Tape& tape, const nn::Tensor& input);

  CMat estimate(const CMat& v_r);

 private:
  ModelDims dims_;
  ParamStore params_;
};

// Pilot columns copied to their subcarrier positions (1-based), zeros elsewhere.
CMat zero_pad(const CMat& h_p_hat, const std::vector<int>& v_k, int n_s);

// {re, im, phase} planes of a complex matrix; the phase of a zero entry is 0.
nn::Tensor ci_input(const CMat& v_r);

// Real/imag planes of a complex matrix as a flat target vector (plane-major).
Vec complex_to_planes(const CMat& m);
CMat planes_to_complex(const Vec& v, int rows, int cols);

struct StageASample {
  nn::Tensor pilot;  // 2 x d x k_p
  nn::Tensor crop;   // 3 x crop_h x crop_w
  Vec target;        // 2*d*k_p angular-domain channel
  // Loss weight equalizing the per-sample NMSE. Target magnitudes scale with
  // the per-sample SNR, so an unweighted MSE would be dominated by the
  // high-SNR draws and leave the low-SNR regime untrained.
  double weight = 1.0;
};

struct StageBSample {
  nn::Tensor input;  // 3 x n_t x n_s
  Vec target;        // 2*n_t*n_s
};

struct TrainLog {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  std::vector<double> lr;
};

using EpochCallback = std::function<void(int epoch, double train_loss)>;

// MSE training per the fine-tuning hyper-parameters; deterministic per seed,
// single-threaded. Throws "training diverged" on a non-finite loss. When
// loss_csv is non-empty, writes "epoch,lr,train_loss,val_loss" rows.
TrainLog train_stage_a(StageAModel& model, const std::vector<StageASample>& train,
                       const std::vector<StageASample>& val, const nn::TrainConfig& cfg,
                       std::uint64_t seed, const std::string& loss_csv = "",
                       const EpochCallback& on_epoch = {});

TrainLog train_stage_b(CiCnnModel& model, const std::vector<StageBSample>& train,
                       const std::vector<StageBSample>& val, const nn::TrainConfig& cfg,
                       std::uint64_t seed, const std::string& loss_csv = "",
                       const EpochCallback& on_epoch = {});

}  // namespace lecln

#endif  // LECLN_MODEL_HPP
