// SPDX-License-Identifier: Apache-2.0

#include "lecln/eval.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lecln/codebook.hpp"

namespace lecln {

double nmse(const CMat& h_hat, const CMat& h) {
  if (h_hat.rows() != h.rows() || h_hat.cols() != h.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double denom = h.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("nmse: reference channel is zero");
  return (h_hat - h).squaredNorm() / denom;
}

double nmse_db(const CMat& h_hat, const CMat& h) { return 10.0 * std::log10(nmse(h_hat, h)); }

CVec zf_precoder(const CVec& h_hat_m) {
  const double n = h_hat_m.norm();
  if (n == 0.0) throw std::invalid_argument("zf_precoder: zero channel estimate");
  return h_hat_m.conjugate() / n;
}

double spectral_efficiency(const std::vector<CVec>& f, const CMat& h, double sigma2,
                           const SeBudget& budget) {
  if (sigma2 <= 0.0) throw std::invalid_argument("spectral_efficiency: sigma2 > 0 required");
  if (static_cast<Eigen::Index>(f.size()) != h.cols())
    throw std::invalid_argument("spectral_efficiency: one precoder per subcarrier");
  if (budget.n_d() < 0) throw std::invalid_argument("spectral_efficiency: n_p > total symbols");
  double sum = 0.0;
  for (Eigen::Index m = 0; m < h.cols(); ++m) {
    const cplx g = f[static_cast<std::size_t>(m)].transpose() * h.col(m);
    sum += std::log2(1.0 + std::norm(g) / sigma2);
  }
  return (static_cast<double>(budget.n_d()) / budget.total_symbols) * sum /
         static_cast<double>(h.cols());
}

double zf_spectral_efficiency(const CMat& h_hat, const CMat& h, double sigma2,
                              const SeBudget& budget) {
  std::vector<CVec> f;
  f.reserve(static_cast<std::size_t>(h_hat.cols()));
  for (Eigen::Index m = 0; m < h_hat.cols(); ++m) f.push_back(zf_precoder(h_hat.col(m)));
  return spectral_efficiency(f, h, sigma2, budget);
}

std::vector<double> normalized_se(const std::vector<double>& se_by_scheme, double se_reference) {
  if (se_reference <= 0.0) throw std::invalid_argument("normalized_se: reference must be > 0");
  std::vector<double> out;
  out.reserve(se_by_scheme.size());
  for (double s : se_by_scheme) out.push_back(s / se_reference);
  return out;
}

void ExperimentGrid::validate() const {
  if (realizations < 1) throw std::invalid_argument("ExperimentGrid: realizations >= 1");
  for (const std::string& s : schemes)
    if (s != "ls" && s != "omp" && s != "amp" && s != "lecln" && s != "lecln_uni_pilot" &&
        s != "lecln_lidar_only" && s != "lecln_no_afwc")
      throw std::invalid_argument("ExperimentGrid: unknown scheme " + s);
}

std::string cell_key(double snr_db, int budget, const std::string& scheme) {
  std::ostringstream os;
  os << snr_db << "|" << budget << "|" << scheme;
  return os.str();
}

namespace {

const std::map<int, std::shared_ptr<StageAModel>>* variant_map(const std::string& scheme,
                                                               const ModelBank& bank) {
  if (scheme == "lecln") return &bank.stage_a;
  if (scheme == "lecln_uni_pilot") return &bank.uni_pilot;
  if (scheme == "lecln_lidar_only") return &bank.lidar_only;
  if (scheme == "lecln_no_afwc") return &bank.no_afwc;
  return nullptr;
}

}  // namespace

CMat estimate_full_band(const std::string& scheme, const Realization& r, const ModelBank& bank,
                        const ExperimentGrid& grid, double* pilot_weight) {
  const int n_s = static_cast<int>(r.h_full.cols());
  if (scheme == "ls") {
    return interpolate_freq(ls_pilot_estimate(r.obs), r.obs.plan.v_k, n_s);
  }
  if (scheme == "omp") {
    return interpolate_freq(omp_pilot_estimate(r.cb, r.obs, grid.omp_sparsity), r.obs.plan.v_k,
                            n_s);
  }
  if (scheme == "amp") {
    return interpolate_freq(amp_pilot_estimate(r.cb, r.obs), r.obs.plan.v_k, n_s);
  }
  const auto* models = variant_map(scheme, bank);
  if (!models) throw std::invalid_argument("estimate_full_band: unknown scheme " + scheme);
  const int budget = static_cast<int>(r.obs.y.size());
  auto it = models->find(budget);
  if (it == models->end() || !it->second)
    throw std::runtime_error("missing checkpoint for " + scheme + " at budget " +
                             std::to_string(budget));
  if (!bank.ci) throw std::runtime_error("missing checkpoint for ci-cnn");
  double w = 0.0;
  // Mirror the per-sample normalization applied to the training samples.
  const double sp = pilot_scale(r.pilot, r.sigma2);
  nn::Tensor pilot = r.pilot;
  pilot.v /= sp;
  // The model predicts the window-aligned isometric angular channel; undo
  // the alignment and map back to the antenna domain with the adjoint of the
  // isometry.
  const CMat h_p_hat = sp * (angular_isometry(r.cb).adjoint() *
                             window_unalign(r.cb, it->second->estimate(pilot, r.crop, &w)));
  if (pilot_weight) *pilot_weight = w;
  const CMat padded = zero_pad(h_p_hat, r.obs.plan.v_k, n_s);
  const double sb = band_scale(padded);
  return sb * bank.ci->estimate(padded / sb);
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "snr_db,budget,scheme,realization,nmse,nmse_db,se_bits,wall_ms\n";
  for (const ResultRow& r : rows) {
    os << r.snr_db << "," << r.budget << "," << r.scheme << "," << r.realization << ",";
    if (r.ok)
      os << r.nmse << "," << r.nmse_db << "," << r.se_bits << "," << r.wall_ms << "\n";
    else
      os << "nan,nan,nan,nan # " << r.reason << "\n";
  }
}

namespace {

void accumulate(ExperimentResult& result) {
  std::map<std::string, std::vector<const ResultRow*>> groups;
  for (const ResultRow& r : result.rows)
    if (r.ok) groups[cell_key(r.snr_db, r.budget, r.scheme)].push_back(&r);
  for (const auto& [key, rows] : groups) {
    CellSummary c;
    c.count = static_cast<int>(rows.size());
    for (const ResultRow* r : rows) {
      c.nmse_mean += r->nmse;
      c.nmse_db_mean += r->nmse_db;
      c.se_mean += r->se_bits;
      c.pilot_weight_mean += r->pilot_weight;
    }
    c.nmse_mean /= c.count;
    c.nmse_db_mean /= c.count;
    c.se_mean /= c.count;
    c.pilot_weight_mean /= c.count;
    if (c.count > 1) {
      double vn = 0.0, vs = 0.0;
      for (const ResultRow* r : rows) {
        vn += (r->nmse - c.nmse_mean) * (r->nmse - c.nmse_mean);
        vs += (r->se_bits - c.se_mean) * (r->se_bits - c.se_mean);
      }
      c.nmse_stderr = std::sqrt(vn / (c.count - 1)) / std::sqrt(static_cast<double>(c.count));
      c.se_stderr = std::sqrt(vs / (c.count - 1)) / std::sqrt(static_cast<double>(c.count));
    }
    result.cells[key] = c;
  }
}

void write_summary_json(const ExperimentResult& result, const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, c] : result.cells)
    j[key] = {{"nmse_mean", c.nmse_mean},     {"nmse_stderr", c.nmse_stderr},
              {"nmse_db_mean", c.nmse_db_mean}, {"se_mean", c.se_mean},
              {"se_stderr", c.se_stderr},     {"pilot_weight_mean", c.pilot_weight_mean},
              {"count", c.count}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

void write_curves(const ExperimentResult& result, const ExperimentGrid& grid,
                  const std::string& dir) {
  auto cell = [&](double snr, int budget, const std::string& scheme) -> const CellSummary* {
    auto it = result.cells.find(cell_key(snr, budget, scheme));
    return it == result.cells.end() ? nullptr : &it->second;
  };
  const int base_budget = grid.measurement_budgets.front();

  {
    std::ofstream os(dir + "/fig3a_nmse_vs_snr.tsv");
    os << "snr_db";
    for (const std::string& s : grid.schemes) os << "\t" << s;
    os << "\n";
    for (double snr : grid.snr_points_db) {
      os << snr;
      for (const std::string& s : grid.schemes) {
        const CellSummary* c = cell(snr, base_budget, s);
        os << "\t" << (c ? c->nmse_db_mean : std::numeric_limits<double>::quiet_NaN());
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(dir + "/fig3b_nmse_vs_budget.tsv");
    os << "snr_db";
    for (int b : grid.measurement_budgets) os << "\tlecln_" << b;
    os << "\n";
    for (double snr : grid.snr_points_db) {
      os << snr;
      for (int b : grid.measurement_budgets) {
        const CellSummary* c = cell(snr, b, "lecln");
        os << "\t" << (c ? c->nmse_db_mean : std::numeric_limits<double>::quiet_NaN());
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(dir + "/fig3c_normalized_se.tsv");
    os << "snr_db";
    for (const std::string& s : grid.schemes) os << "\t" << s;
    os << "\n";
    for (double snr : grid.snr_points_db) {
      const CellSummary* ref = cell(snr, base_budget, "lecln");
      os << snr;
      for (const std::string& s : grid.schemes) {
        const CellSummary* c = cell(snr, base_budget, s);
        const double v = (c && ref && ref->se_mean > 0.0)
                             ? c->se_mean / ref->se_mean
                             : std::numeric_limits<double>::quiet_NaN();
        os << "\t" << v;
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(dir + "/fig5a_ablation_nmse.tsv");
    const std::vector<std::string> ablations = {"lecln", "lecln_uni_pilot", "lecln_lidar_only",
                                                "lecln_no_afwc"};
    os << "snr_db";
    for (const std::string& s : ablations) os << "\t" << s;
    os << "\n";
    for (double snr : grid.snr_points_db) {
      os << snr;
      for (const std::string& s : ablations) {
        const CellSummary* c = cell(snr, base_budget, s);
        os << "\t" << (c ? c->nmse_db_mean : std::numeric_limits<double>::quiet_NaN());
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(dir + "/fig5b_pilot_weight.tsv");
    os << "snr_db\tbudget\tpilot_weight_mean\n";
    for (double snr : grid.snr_points_db)
      for (int b : grid.measurement_budgets) {
        const CellSummary* c = cell(snr, b, "lecln");
        os << snr << "\t" << b << "\t"
           << (c ? c->pilot_weight_mean : std::numeric_limits<double>::quiet_NaN()) << "\n";
      }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentGrid& grid, const DatasetConfig& cfg,
                                const ModelBank& bank, const std::string& out_dir) {
  nn::tune_allocator();
  grid.validate();
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  for (double snr : grid.snr_points_db) {
    for (int budget : grid.measurement_budgets) {
      DatasetConfig bcfg = cfg;
      bcfg.dims.n_p = budget;
      for (const std::string& scheme : grid.schemes) {
        for (int k = 0; k < grid.realizations; ++k) {
          ResultRow row;
          row.snr_db = snr;
          row.budget = budget;
          row.scheme = scheme;
          row.realization = k;
          try {
            const Realization r =
                generate_realization(bcfg, split_seed(bcfg, "eval", k), snr);
            const auto t0 = std::chrono::steady_clock::now();
            double w = 0.0;
            const CMat h_hat = estimate_full_band(scheme, r, bank, grid, &w);
            const auto t1 = std::chrono::steady_clock::now();
            row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            row.pilot_weight = w;
            row.nmse = nmse(h_hat, r.h_full);
            row.nmse_db = 10.0 * std::log10(row.nmse);
            SeBudget se_budget;
            se_budget.total_symbols = grid.se_total_symbols;
            se_budget.n_p = budget;
            row.se_bits = zf_spectral_efficiency(h_hat, r.h_full, r.sigma2, se_budget);
          } catch (const std::exception& e) {
            row.ok = false;
            row.reason = e.what();
          }
          result.rows.push_back(std::move(row));
        }
      }
    }
  }
  accumulate(result);
  write_results_csv(result.rows, out_dir + "/results.csv");
  write_summary_json(result, out_dir + "/summary.json");
  write_curves(result, grid, out_dir);
  return result;
}

}  // namespace lecln
