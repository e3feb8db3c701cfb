// SPDX-License-Identifier: Apache-2.0
//
// lecln command-line entry point: dataset generation, two-stage training,
// experiment sweeps, and result reporting. Execution is sequential so fixed
// seeds reproduce every artifact bit-exactly.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lecln/eval.hpp"
#include "lecln/io/config.hpp"

namespace {

using lecln::io::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

RunConfig load_config(const CommonArgs& args) {
  std::map<std::string, std::string> kv;
  if (!args.config_path.empty()) kv = lecln::io::parse_config_file(args.config_path);
  RunConfig cfg = lecln::io::make_run_config(kv);
  if (args.seed_set) cfg.data.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

std::string dataset_dir(const RunConfig& cfg, int budget) {
  return cfg.out_dir + "/dataset_b" + std::to_string(budget);
}

std::string checkpoint_dir(const RunConfig& cfg, const std::string& scheme, int budget) {
  if (scheme == "ci_cnn") return cfg.out_dir + "/ckpt/ci_cnn";
  return cfg.out_dir + "/ckpt/" + scheme + "_b" + std::to_string(budget);
}

lecln::Variant variant_of(const std::string& scheme) {
  if (scheme == "lecln") return lecln::Variant::Full;
  if (scheme == "lecln_uni_pilot") return lecln::Variant::UniPilot;
  if (scheme == "lecln_lidar_only") return lecln::Variant::LidarOnly;
  if (scheme == "lecln_no_afwc") return lecln::Variant::NoAfwc;
  throw std::invalid_argument("unknown model scheme " + scheme);
}

int cmd_gen(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  for (int budget : cfg.grid.measurement_budgets) {
    RunConfig bcfg = cfg;
    bcfg.data.dims.n_p = budget;
    const std::string dir = dataset_dir(cfg, budget);
    std::cout << "generating " << dir << " (budget " << budget << ")\n";
    const int n = lecln::write_dataset(bcfg.data, dir, lecln::io::config_hash(bcfg));
    std::cout << "wrote " << n << " samples\n";
  }
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& stage, int budget,
              const std::string& scheme) {
  RunConfig cfg = load_config(args);
  cfg.data.dims.n_p = budget;
  const std::string hash = lecln::io::config_hash(cfg);
  const std::uint64_t train_seed = cfg.data.seed ^ 0x747261696eULL;

  if (stage == "a") {
    const lecln::LoadedDataset train = lecln::load_dataset(dataset_dir(cfg, budget), "train", hash);
    const lecln::LoadedDataset val = lecln::load_dataset(dataset_dir(cfg, budget), "val", hash);
    lecln::StageAModel model(cfg.data.dims, variant_of(scheme), cfg.data.seed);
    const std::string ckpt = checkpoint_dir(cfg, scheme, budget);
    std::filesystem::create_directories(ckpt);
    auto on_epoch = [&](int epoch, double loss) {
      if ((epoch + 1) % 50 == 0) model.params().save(ckpt, epoch, hash);
      std::cout << "epoch " << epoch << " loss " << loss << "\n";
    };
    try {
      lecln::train_stage_a(model, train.a, val.a, cfg.train, train_seed, ckpt + "/loss.csv",
                           on_epoch);
    } catch (const std::exception& e) {
      std::cerr << "training aborted: " << e.what() << " (last periodic checkpoint kept)\n";
      return 3;
    }
    model.params().save(ckpt, cfg.train.epochs - 1, hash);
    std::cout << "checkpoint " << ckpt << "\n";
    return 0;
  }
  if (stage == "b") {
    const lecln::LoadedDataset train = lecln::load_dataset(dataset_dir(cfg, budget), "train", hash);
    const lecln::LoadedDataset val = lecln::load_dataset(dataset_dir(cfg, budget), "val", hash);
    lecln::CiCnnModel model(cfg.data.dims, cfg.data.seed ^ 0x6369ULL);
    const std::string ckpt = checkpoint_dir(cfg, "ci_cnn", budget);
    std::filesystem::create_directories(ckpt);
    auto on_epoch = [&](int epoch, double loss) {
      if ((epoch + 1) % 50 == 0) model.params().save(ckpt, epoch, hash);
      std::cout << "epoch " << epoch << " loss " << loss << "\n";
    };
    try {
      lecln::train_stage_b(model, train.b, val.b, cfg.train, train_seed, ckpt + "/loss.csv",
                           on_epoch);
    } catch (const std::exception& e) {
      std::cerr << "training aborted: " << e.what() << " (last periodic checkpoint kept)\n";
      return 3;
    }
    model.params().save(ckpt, cfg.train.epochs - 1, hash);
    std::cout << "checkpoint " << ckpt << "\n";
    return 0;
  }
  throw std::invalid_argument("stage must be a or b");
}

int cmd_eval(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  lecln::ModelBank bank;
  for (int budget : cfg.grid.measurement_budgets) {
    RunConfig bcfg = cfg;
    bcfg.data.dims.n_p = budget;
    const std::string hash = lecln::io::config_hash(bcfg);
    for (const std::string& scheme : cfg.grid.schemes) {
      if (scheme == "ls" || scheme == "omp" || scheme == "amp") continue;
      const std::string ckpt = checkpoint_dir(cfg, scheme, budget);
      if (!std::filesystem::exists(ckpt + "/manifest.json")) continue;
      auto model = std::make_shared<lecln::StageAModel>(bcfg.data.dims, variant_of(scheme),
                                                        bcfg.data.seed);
      model->params().load(ckpt, hash);
      switch (variant_of(scheme)) {
        case lecln::Variant::Full: bank.stage_a[budget] = model; break;
        case lecln::Variant::UniPilot: bank.uni_pilot[budget] = model; break;
        case lecln::Variant::LidarOnly: bank.lidar_only[budget] = model; break;
        case lecln::Variant::NoAfwc: bank.no_afwc[budget] = model; break;
      }
    }
  }
  const std::string ci_ckpt = cfg.out_dir + "/ckpt/ci_cnn";
  if (std::filesystem::exists(ci_ckpt + "/manifest.json")) {
    bank.ci = std::make_shared<lecln::CiCnnModel>(cfg.data.dims, cfg.data.seed ^ 0x6369ULL);
    bank.ci->params().load(ci_ckpt);
  }
  const std::string out = cfg.out_dir + "/results";
  lecln::run_experiment(cfg.grid, cfg.data, bank, out);
  std::cout << "results in " << out << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const std::string path = cfg.out_dir + "/results/summary.json";
  std::ifstream is(path);
  if (!is) throw std::runtime_error("report: missing " + path + " (run eval first)");
  const nlohmann::json j = nlohmann::json::parse(is);
  std::cout << "cell (snr|budget|scheme)  nmse_db  se  n\n";
  for (auto it = j.begin(); it != j.end(); ++it)
    std::cout << it.key() << "  " << it.value().value("nmse_db_mean", 0.0) << "  "
              << it.value().value("se_mean", 0.0) << "  " << it.value().value("count", 0) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lecln: LiDAR-enhanced CSI estimation pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path, "configuration file");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--seed", args.seed, "root seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  app.add_option("--jobs", args.jobs, "worker count (execution stays sequential)");

  auto* gen = app.add_subcommand("gen", "generate datasets for every measurement budget");
  std::string stage = "a";
  int budget = 8;
  std::string scheme = "lecln";
  auto* train = app.add_subcommand("train", "train one stage");
  train->add_option("--stage", stage, "a or b")->check(CLI::IsMember({"a", "b"}));
  train->add_option("--budget", budget, "pilot symbols")->check(CLI::PositiveNumber);
  train->add_option("--variant", scheme,
                    "lecln, lecln_uni_pilot, lecln_lidar_only, or lecln_no_afwc");
  auto* eval = app.add_subcommand("eval", "run the experiment grid");
  auto* report = app.add_subcommand("report", "print the summary table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (train->parsed()) return cmd_train(args, stage, budget, scheme);
    if (eval->parsed()) return cmd_eval(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
