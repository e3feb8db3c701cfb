// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lecln/eval.hpp"

using namespace lecln;

TEST_CASE("nmse basics") {
  CMat h(2, 2);
  h << cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1);
  CHECK(nmse(h, h) == 0.0);
  CHECK(nmse(CMat::Zero(2, 2), h) == doctest::Approx(1.0));
  CHECK(nmse_db(CMat::Zero(2, 2), h) == doctest::Approx(0.0));
  CHECK(nmse(2.0 * h, h) == doctest::Approx(1.0));
  // Scale invariance in the reference: scaling both matrices keeps NMSE.
  CHECK(nmse(1.5 * h, 3.0 * h) == doctest::Approx(nmse(0.5 * h, h)));
  CHECK_THROWS_AS(nmse(h, CMat::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("zf_precoder conjugate match") {
  Rng rng(1);
  std::normal_distribution<double> g;
  CVec h(6);
  for (int i = 0; i < 6; ++i) h(i) = cplx(g(rng), g(rng));
  const CVec f = zf_precoder(h);
  CHECK(f.norm() == doctest::Approx(1.0));
  const cplx gain = f.transpose() * h;
  CHECK(gain.real() == doctest::Approx(h.norm()));
  CHECK(std::abs(gain.imag()) < 1e-12);
  // Orthogonal channel gets zero gain from this precoder.
  CVec h2(2), h3(2);
  h2 << cplx(1, 0), cplx(0, 0);
  h3 << cplx(0, 0), cplx(1, 0);
  const cplx cross = zf_precoder(h2).transpose() * h3;
  CHECK(std::abs(cross) == 0.0);
  CHECK_THROWS_AS(zf_precoder(CVec::Zero(4)), std::invalid_argument);
}

TEST_CASE("spectral efficiency overhead example") {
  // Unit-gain channel on every subcarrier at sigma2 = 1: each term is 1 bit,
  // scaled by the data fraction (900 - 8)/900.
  const int n_s = 16;
  CMat h(4, n_s);
  h.setZero();
  for (int m = 0; m < n_s; ++m) h(0, m) = cplx(1.0, 0.0);
  std::vector<CVec> f;
  for (int m = 0; m < n_s; ++m) f.push_back(zf_precoder(h.col(m)));
  SeBudget budget;
  CHECK(budget.n_d() == 892);
  CHECK(spectral_efficiency(f, h, 1.0, budget) == doctest::Approx(892.0 / 900.0).epsilon(1e-5));
  CHECK(zf_spectral_efficiency(h, h, 1.0, budget) == doctest::Approx(0.991111).epsilon(1e-5));

  SeBudget all_pilots{900, 900};
  CHECK(spectral_efficiency(f, h, 1.0, all_pilots) == 0.0);

  // Phase rotation of the estimate leaves the ZF rate unchanged.
  const CMat rotated = std::polar(1.0, 1.1) * h;
  CHECK(zf_spectral_efficiency(rotated, h, 1.0, budget) ==
        doctest::Approx(zf_spectral_efficiency(h, h, 1.0, budget)));
  CHECK_THROWS_AS(spectral_efficiency(f, h, 0.0, budget), std::invalid_argument);
}

TEST_CASE("normalized_se divides by the reference") {
  const std::vector<double> out = normalized_se({1.0, 0.5, 2.0}, 2.0);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.25));
  CHECK(out[2] == doctest::Approx(1.0));
}

TEST_CASE("experiment grid validation") {
  ExperimentGrid grid;
  grid.validate();
  grid.schemes = {"ls", "mystery"};
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
  grid.schemes = {"ls"};
  grid.realizations = 0;
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}

TEST_CASE("cell_key format") {
  CHECK(cell_key(6.0, 8, "ls") == "6|8|ls");
  CHECK(cell_key(-3.0, 32, "lecln") == "-3|32|lecln");
}

namespace {

DatasetConfig fast_dataset_config() {
  DatasetConfig cfg;
  cfg.lidar.a_h_deg = 1.2;  // 300-column range image keeps generation quick
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("realization SNR calibration is tight") {
  const DatasetConfig cfg = fast_dataset_config();
  const Realization r = generate_realization(cfg, 5, 6.0);
  CHECK(r.snr_db == doctest::Approx(6.0));
  // Recompute the realized SNR over the stacked per-symbol precoders.
  CMat stacked(r.ch.H.rows(), 0);
  for (const AnalogPrecoder& pre : r.obs.f) {
    CMat next(r.ch.H.rows(), stacked.cols() + pre.f_r.cols());
    next << stacked, pre.f_r;
    stacked = next;
  }
  CHECK(measure_snr_db(stacked, r.h_full, r.sigma2) == doctest::Approx(6.0).epsilon(0.012));
}

TEST_CASE("run_experiment tiny grid with one classical and one missing scheme") {
  const DatasetConfig cfg = fast_dataset_config();
  ExperimentGrid grid;
  grid.snr_points_db = {6.0};
  grid.measurement_budgets = {8};
  grid.realizations = 2;
  grid.schemes = {"ls", "lecln"};
  grid.omp_sparsity = 4;
  const std::string out = "tmp_eval_out";
  std::filesystem::remove_all(out);
  const ModelBank bank;  // no trained models
  const ExperimentResult res = run_experiment(grid, cfg, bank, out);
  REQUIRE(res.rows.size() == 4);

  int ok_rows = 0, nan_rows = 0;
  for (const ResultRow& row : res.rows) {
    if (row.scheme == "ls") {
      CHECK(row.ok);
      CHECK(std::isfinite(row.nmse));
      CHECK(row.nmse > 0.0);
      CHECK(row.se_bits > 0.0);
      ++ok_rows;
    } else {
      CHECK_FALSE(row.ok);
      CHECK(row.reason.find("missing checkpoint") != std::string::npos);
      ++nan_rows;
    }
  }
  CHECK(ok_rows == 2);
  CHECK(nan_rows == 2);

  const CellSummary& cell = res.cells.at(cell_key(6.0, 8, "ls"));
  CHECK(cell.count == 2);
  CHECK(std::isfinite(cell.nmse_db_mean));

  std::ifstream csv(out + "/results.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header.find("snr_db") == 0);
  int lines = 0;
  bool saw_nan = false;
  for (std::string line; std::getline(csv, line);) {
    ++lines;
    if (line.find("nan") != std::string::npos) saw_nan = true;
  }
  CHECK(lines == 4);
  CHECK(saw_nan);
  CHECK(std::filesystem::exists(out + "/summary.json"));
  CHECK(std::filesystem::exists(out + "/fig3a_nmse_vs_snr.tsv"));
  CHECK(std::filesystem::exists(out + "/fig3b_nmse_vs_budget.tsv"));
  CHECK(std::filesystem::exists(out + "/fig3c_normalized_se.tsv"));
  std::filesystem::remove_all(out);
}

TEST_CASE("run_experiment is deterministic") {
  const DatasetConfig cfg = fast_dataset_config();
  ExperimentGrid grid;
  grid.snr_points_db = {3.0};
  grid.measurement_budgets = {8};
  grid.realizations = 1;
  grid.schemes = {"ls"};
  const ModelBank bank;
  std::filesystem::remove_all("tmp_eval_a");
  std::filesystem::remove_all("tmp_eval_b");
  run_experiment(grid, cfg, bank, "tmp_eval_a");
  run_experiment(grid, cfg, bank, "tmp_eval_b");
  // Everything except the wall-clock column must match byte for byte.
  const auto strip_wall = [](const std::string& path) {
    std::ifstream is(path);
    std::string out;
    for (std::string line; std::getline(is, line);)
      out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  const std::string sa = strip_wall("tmp_eval_a/results.csv");
  CHECK(sa == strip_wall("tmp_eval_b/results.csv"));
  CHECK(!sa.empty());
  std::filesystem::remove_all("tmp_eval_a");
  std::filesystem::remove_all("tmp_eval_b");
}
