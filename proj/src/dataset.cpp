// SPDX-License-Identifier: Apache-2.0

#include "lecln/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "lecln/io/tensor_file.hpp"

namespace lecln {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

nlohmann::json config_json(const DatasetConfig& cfg) {
  nlohmann::json j;
  j["sys"] = {{"n_t", cfg.sys.n_t},       {"n_rf", cfg.sys.n_rf},
              {"n_s", cfg.sys.n_s},       {"n_users", cfg.sys.n_users},
              {"f_c_ghz", cfg.sys.f_c_ghz}, {"bandwidth_hz", cfg.sys.bandwidth_hz},
              {"ps_bits", cfg.sys.ps_bits}, {"h_t", cfg.sys.h_t},
              {"h_r", cfg.sys.h_r}};
  j["scene"] = {{"road_x_min", cfg.scene.road_x_min},
                {"road_x_max", cfg.scene.road_x_max},
                {"road_y_min", cfg.scene.road_y_min},
                {"road_y_max", cfg.scene.road_y_max},
                {"n_vehicles", cfg.scene.n_vehicles}};
  j["lidar"] = {{"a_h_deg", cfg.lidar.a_h_deg},
                {"f_up_deg", cfg.lidar.f_up_deg},
                {"f_down_deg", cfg.lidar.f_down_deg},
                {"m_b", cfg.lidar.m_b},
                {"max_range", cfg.lidar.max_range}};
  j["dims"] = {{"d", cfg.dims.d},         {"n_p", cfg.dims.n_p},   {"n_t", cfg.dims.n_t},
               {"k_p", cfg.dims.k_p},     {"n_s", cfg.dims.n_s},   {"feat", cfg.dims.feat},
               {"crop_h", cfg.dims.crop_h}, {"crop_w", cfg.dims.crop_w}};
  j["n_w"] = cfg.n_w;
  j["splits"] = {{"train", cfg.n_train}, {"val", cfg.n_val}, {"test", cfg.n_test}};
  j["snr_range_db"] = {cfg.snr_min_db, cfg.snr_max_db};
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

Realization generate_realization(const DatasetConfig& cfg, std::uint64_t sample_seed,
                                 double snr_db) {
  if (cfg.dims.n_t != cfg.sys.n_t || cfg.dims.n_s != cfg.sys.n_s)
    throw std::invalid_argument("DatasetConfig: dims disagree with SystemConfig");
  if (cfg.dims.crop_h != cfg.lidar.image_height())
    throw std::invalid_argument("DatasetConfig: crop height must equal the beam count");
  std::string last_error;
  for (int attempt = 0; attempt < cfg.max_scene_retries; ++attempt) {
    const std::uint64_t draw_seed =
        combine(combine(cfg.seed, sample_seed), static_cast<std::uint64_t>(attempt));
    try {
      Realization r;
      r.seed = draw_seed;
      r.snr_db = snr_db;

      SceneSpec spec = cfg.scene;
      spec.rng_seed = draw_seed;
      r.scene = build_scene(spec);

      const std::vector<ChannelPath> paths = derive_paths(r.scene, cfg.sys);
      r.ch = assemble_wideband(paths, cfg.sys);
      r.h_full = r.ch.H;

      LidarConfig lidar = cfg.lidar;
      lidar.mount_position = spec.tx_position;
      const PointCloud pc = raycast_lidar(r.scene, lidar);
      const PointCloud body = filter_ground(pc, 0.2, lidar.mount_position.z());
      const std::vector<int> assignment = dbscan(body, cfg.cluster.eps, cfg.cluster.min_pts);
      const ClusterLabels labels = label_clusters(assignment, body, r.scene, cfg.cluster);
      r.theta_k = labels.theta_k;
      const RangeImage ri = range_project(body, lidar);
      const SpFeatureImage sp = sp_feature_image(ri, labels, body, cfg.sys);
      std::vector<double> crop = crop_feature_image(sp, labels.rx_azimuth, cfg.dims.crop_w);
      // Bring the three channels (range, labels, path loss dB) to unit order.
      const std::size_t plane = static_cast<std::size_t>(cfg.dims.crop_h) *
                                static_cast<std::size_t>(cfg.dims.crop_w);
      for (std::size_t i = 0; i < plane; ++i) crop[i] /= lidar.max_range;
      for (std::size_t i = plane; i < 2 * plane; ++i) crop[i] /= 2.0;
      for (std::size_t i = 2 * plane; i < 3 * plane; ++i) crop[i] /= 100.0;
      r.crop = nn::Tensor({3, cfg.dims.crop_h, cfg.dims.crop_w},
                          Eigen::Map<const Vec>(crop.data(), static_cast<Eigen::Index>(crop.size())));

      const PilotPlan plan = make_pilot_plan(1, cfg.sys, cfg.dims.k_p, cfg.dims.n_p);
      r.h_p = channel_at_subcarriers(r.ch, plan.v_k);
      const std::uint64_t obs_seed = combine(draw_seed, 0x70696c6f74ULL);
      const PilotObservation dry = observe_pilots(r.h_p, plan, cfg.sys, 0.0, obs_seed);
      r.sigma2 = sigma2_for_snr(stacked_precoder(dry), r.h_full, snr_db);
      r.obs = observe_pilots(r.h_p, plan, cfg.sys, r.sigma2, obs_seed);

      r.cb = make_codebook(labels.theta_k, cfg.dims.d, cfg.sys.n_t, cfg.n_w);
      const ProjectedMeasurement proj = project_observation(r.cb, r.obs);
      r.pilot = nn::Tensor({2, cfg.dims.d, cfg.dims.k_p},
                           Eigen::Map<const Vec>(proj.tensor.data(),
                                                 static_cast<Eigen::Index>(proj.tensor.size())));
      return r;
    } catch (const std::runtime_error& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("realization infeasible after retries: " + last_error);
}

Realization generate_training_realization(const DatasetConfig& cfg, std::uint64_t sample_seed) {
  Rng rng(combine(combine(cfg.seed, sample_seed), 0x736e72ULL));
  std::uniform_real_distribution<double> u(cfg.snr_min_db, cfg.snr_max_db);
  return generate_realization(cfg, sample_seed, u(rng));
}

double pilot_scale(const nn::Tensor& pilot, double sigma2) {
  if (sigma2 > 0.0) return 0.25 * std::sqrt(sigma2);
  if (pilot.v.size() == 0) return 1.0;
  const double s = std::sqrt(pilot.v.squaredNorm() / static_cast<double>(pilot.v.size()));
  return s > 0.0 ? s : 1.0;
}

double band_scale(const CMat& v_r) {
  if (v_r.size() == 0) return 1.0;
  const double s = std::sqrt(v_r.squaredNorm() / static_cast<double>(2 * v_r.size()));
  return s > 0.0 ? s : 1.0;
}

namespace {

StageASample make_stage_a(const nn::Tensor& pilot, const nn::Tensor& crop, const CMat& h_a,
                          double sigma2) {
  StageASample s;
  const double sc = pilot_scale(pilot, sigma2);
  s.pilot = pilot;
  s.pilot.v /= sc;
  s.crop = crop;
  s.target = complex_to_planes(h_a) / sc;
  // Equalize the per-sample NMSE: the sigma scaling makes target magnitudes
  // grow with the SNR, and an unweighted MSE would all but ignore the
  // low-SNR draws. Capped for near-zero channels.
  s.weight = std::min(1.0, static_cast<double>(s.target.size()) /
                               std::max(s.target.squaredNorm(), 1e-12));
  return s;
}

StageBSample make_stage_b(const CMat& h_p, const CMat& h_full, const std::vector<int>& v_k) {
  StageBSample s;
  const CMat padded = zero_pad(h_p, v_k, static_cast<int>(h_full.cols()));
  const double sc = band_scale(padded);
  s.input = ci_input(padded / sc);
  s.target = complex_to_planes(h_full) / sc;
  return s;
}

}  // namespace

StageASample to_stage_a_sample(const Realization& r) {
  return make_stage_a(r.pilot, r.crop, window_align(r.cb, angular_isometry(r.cb) * r.h_p),
                      r.sigma2);
}

StageBSample to_stage_b_sample(const Realization& r) {
  return make_stage_b(r.h_p, r.h_full, r.obs.plan.v_k);
}

std::uint64_t split_seed(const DatasetConfig& cfg, const std::string& split, int index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : split) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ULL;
  return combine(h, static_cast<std::uint64_t>(index));
}

namespace {

void write_tensor(const std::string& path, const nn::Tensor& t) {
  std::vector<std::uint32_t> dims(t.dims.begin(), t.dims.end());
  io::write_real(path, dims, std::vector<double>(t.v.data(), t.v.data() + t.v.size()));
}

nn::Tensor read_tensor(const std::string& path) {
  std::vector<std::uint32_t> dims;
  const std::vector<double> values = io::read_real(path, &dims);
  return nn::Tensor(std::vector<int>(dims.begin(), dims.end()),
                    Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size())));
}

}  // namespace

int write_dataset(const DatasetConfig& cfg, const std::string& dir,
                  const std::string& config_hash) {
  namespace fs = std::filesystem;
  nn::tune_allocator();
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, int>> splits = {
      {"train", cfg.n_train}, {"val", cfg.n_val}, {"test", cfg.n_test}};
  const PilotPlan plan = make_pilot_plan(1, cfg.sys, cfg.dims.k_p, cfg.dims.n_p);
  int written = 0;
  for (const auto& [split, count] : splits) {
    const std::string split_dir = dir + "/" + split;
    fs::create_directories(split_dir);
    for (int i = 0; i < count; ++i) {
      const Realization r = generate_training_realization(cfg, split_seed(cfg, split, i));
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%06d", i);
      const std::string sd = split_dir + "/" + name;
      fs::create_directories(sd);
      write_tensor(sd + "/pilot.ten", r.pilot);
      write_tensor(sd + "/crop.ten", r.crop);
      io::write_cmat(sd + "/h_p.ten", r.h_p);
      // Stage-A regression target: the window-aligned isometric angular channel.
      io::write_cmat(sd + "/h_a.ten", window_align(r.cb, angular_isometry(r.cb) * r.h_p));
      io::write_cmat(sd + "/h_full.ten", r.h_full);
      nlohmann::json meta = {{"snr_db", r.snr_db}, {"sigma2", r.sigma2}, {"seed", r.seed}};
      std::ofstream ms(sd + "/meta.json");
      ms << meta.dump() << "\n";
      ++written;
    }
  }
  nlohmann::json manifest = config_json(cfg);
  manifest["config_hash"] = config_hash;
  manifest["pilot_subcarriers"] = plan.v_k;
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw std::runtime_error("dataset: cannot write manifest in " + dir);
  os << manifest.dump(2) << "\n";
  return written;
}

LoadedDataset load_dataset(const std::string& dir, const std::string& split,
                           const std::string& config_hash) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("dataset: missing manifest in " + dir);
  const nlohmann::json manifest = nlohmann::json::parse(is);
  if (!config_hash.empty()) {
    const std::string saved = manifest.value("config_hash", "");
    if (!saved.empty() && saved != config_hash)
      throw std::runtime_error("dataset: config hash mismatch in " + dir);
  }
  const int count = manifest.at("splits").at(split).get<int>();
  const std::vector<int> v_k = manifest.at("pilot_subcarriers").get<std::vector<int>>();
  LoadedDataset ds;
  ds.a.reserve(static_cast<std::size_t>(count));
  ds.b.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%06d", i);
    const std::string sd = dir + "/" + split + "/" + name;
    const CMat h_p = io::read_cmat(sd + "/h_p.ten");
    const CMat h_full = io::read_cmat(sd + "/h_full.ten");
    std::ifstream ms(sd + "/meta.json");
    if (!ms) throw std::runtime_error("dataset: missing meta in " + sd);
    const double sigma2 = nlohmann::json::parse(ms).at("sigma2").get<double>();
    ds.a.push_back(make_stage_a(read_tensor(sd + "/pilot.ten"), read_tensor(sd + "/crop.ten"),
                                io::read_cmat(sd + "/h_a.ten"), sigma2));
    ds.b.push_back(make_stage_b(h_p, h_full, v_k));
  }
  return ds;
}

}  // namespace lecln
