// SPDX-License-Identifier: Apache-2.0
//
// Metrics (NMSE, ZF precoding, spectral efficiency) and the experiment
// orchestrator that sweeps SNR x measurement budget x scheme over fresh
// scene realizations and writes CSV/JSON/TSV outputs.

#ifndef LECLN_EVAL_HPP
#define LECLN_EVAL_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lecln/baselines.hpp"
#include "lecln/dataset.hpp"
#include "lecln/model.hpp"

namespace lecln {

// ||h_hat - h||_F^2 / ||h||_F^2; throws when h is zero.
double nmse(const CMat& h_hat, const CMat& h);
double nmse_db(const CMat& h_hat, const CMat& h);

// Unit-norm conjugate match (single-user ZF); throws on a zero estimate.
CVec zf_precoder(const CVec& h_hat_m);

struct SeBudget {
  int total_symbols = 900;
  int n_p = 8;
  int n_d() const { return total_symbols - n_p; }
};

// R = (N_D/total) * (1/N_s) * sum_m log2(1 + |f_m^T h_m|^2 / sigma2).
double spectral_efficiency(const std::vector<CVec>& f, const CMat& h, double sigma2,
                           const SeBudget& budget);

// SE of the ZF precoder built from h_hat, evaluated on the true channel.
double zf_spectral_efficiency(const CMat& h_hat, const CMat& h, double sigma2,
                              const SeBudget& budget);

std::vector<double> normalized_se(const std::vector<double>& se_by_scheme, double se_reference);

struct ExperimentGrid {
  std::vector<double> snr_points_db = {-3, 0, 3, 6, 9, 12, 15, 18, 21};
  std::vector<int> measurement_budgets = {8, 16, 32};
  int realizations = 300;
  std::vector<std::string> schemes = {"ls", "omp", "amp", "lecln"};
  int se_total_symbols = 900;
  int omp_sparsity = 8;

  void validate() const;
};

// Trained models per measurement budget; the CI-CNN is budget-independent.
struct ModelBank {
  std::map<int, std::shared_ptr<StageAModel>> stage_a;  // full LE-CLN
  std::map<int, std::shared_ptr<StageAModel>> uni_pilot;
  std::map<int, std::shared_ptr<StageAModel>> lidar_only;
  std::map<int, std::shared_ptr<StageAModel>> no_afwc;
  std::shared_ptr<CiCnnModel> ci;
};

struct ResultRow {
  double snr_db = 0.0;
  int budget = 0;
  std::string scheme;
  int realization = 0;
  double nmse = 0.0;
  double nmse_db = 0.0;
  double se_bits = 0.0;
  double wall_ms = 0.0;
  double pilot_weight = 0.0;  // mean AFWC weight on the pilot half (lecln only)
  bool ok = true;
  std::string reason;
};

struct CellSummary {
  double nmse_mean = 0.0;
  double nmse_stderr = 0.0;
  double nmse_db_mean = 0.0;
  double se_mean = 0.0;
  double se_stderr = 0.0;
  double pilot_weight_mean = 0.0;
  int count = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  // keyed by "snr|budget|scheme"
  std::map<std::string, CellSummary> cells;
};

std::string cell_key(double snr_db, int budget, const std::string& scheme);

// Runs the full grid deterministically and writes results.csv, summary.json,
// and per-figure TSV curves into out_dir. Missing models produce NaN rows.
ExperimentResult run_experiment(const ExperimentGrid& grid, const DatasetConfig& cfg,
                                const ModelBank& bank, const std::string& out_dir);

// One scheme on one realization; returns the full-band estimate.
CMat estimate_full_band(const std::string& scheme, const Realization& r, const ModelBank& bank,
                        const ExperimentGrid& grid, double* pilot_weight = nullptr);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);

}  // namespace lecln

#endif  // LECLN_EVAL_HPP
