// SPDX-License-Identifier: Apache-2.0
//
// End-to-end sample generation: scene -> channel + point cloud -> pilot
// observation -> angular projection and feature crop, with deterministic
// per-sample seeds, plus dataset persistence for the training stages.

#ifndef LECLN_DATASET_HPP
#define LECLN_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "lecln/channel.hpp"
#include "lecln/codebook.hpp"
#include "lecln/lidar.hpp"
#include "lecln/model.hpp"
#include "lecln/pilots.hpp"
#include "lecln/scene.hpp"

namespace lecln {

struct DatasetConfig {
  SystemConfig sys;
  SceneSpec scene;  // template; rng_seed is overridden per sample
  LidarConfig lidar;
  ClusterParams cluster;
  ModelDims dims;
  int n_w = 13;
  int n_train = 8000;
  int n_val = 1000;
  int n_test = 300;
  double snr_min_db = -3.0;
  double snr_max_db = 21.0;
  std::uint64_t seed = 1;
  int max_scene_retries = 16;
};

// One fully generated realization; carries the raw observation so classical
// baselines can run on the same draw.
struct Realization {
  Scene scene;
  WidebandChannel ch;
  PilotObservation obs;
  UloDftCodebook cb;
  double theta_k = 0.0;   // coarse angle from the LiDAR clusters
  nn::Tensor pilot;       // 2 x d x k_p projected observation
  nn::Tensor crop;        // 3 x crop_h x crop_w feature crop
  CMat h_p;               // ground truth at the pilot subcarriers
  CMat h_full;            // ground truth over all subcarriers
  double snr_db = 0.0;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic per (cfg.seed, sample_seed, snr_db). Retries with a perturbed
// scene seed when a draw is infeasible (blocked receiver, undetected cluster);
// throws after cfg.max_scene_retries failures.
Realization generate_realization(const DatasetConfig& cfg, std::uint64_t sample_seed,
                                 double snr_db);

// Training draw: SNR sampled uniformly from [snr_min_db, snr_max_db].
Realization generate_training_realization(const DatasetConfig& cfg, std::uint64_t sample_seed);

// Per-sample feature scale for stage A. Channel magnitudes span several
// orders across scenes while the per-realization noise level sigma tracks
// them, so inputs and targets are normalized by sigma: the absolute scale
// cancels and the normalized magnitude itself encodes the SNR. Falls back to
// the tensor RMS for noiseless observations. Estimates scale back by it.
double pilot_scale(const nn::Tensor& pilot, double sigma2);

// RMS of the re/im planes of the zero-padded stage-B input (1 when zero).
double band_scale(const CMat& v_r);

StageASample to_stage_a_sample(const Realization& r);
StageBSample to_stage_b_sample(const Realization& r);

// Per-sample seeds for a named split; splits never overlap.
std::uint64_t split_seed(const DatasetConfig& cfg, const std::string& split, int index);

// Writes split subdirectories of sample tensor files plus manifest.json with
// the full configuration and hash. Returns the number of samples written.
int write_dataset(const DatasetConfig& cfg, const std::string& dir, const std::string& config_hash);

struct LoadedDataset {
  std::vector<StageASample> a;
  std::vector<StageBSample> b;
};

// Reads one split ("train", "val", "test") back from write_dataset output.
LoadedDataset load_dataset(const std::string& dir, const std::string& split,
                           const std::string& config_hash = "");

}  // namespace lecln

#endif  // LECLN_DATASET_HPP
