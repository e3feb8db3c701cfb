// SPDX-License-Identifier: Apache-2.0

#include "lecln/io/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace lecln::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (...) {
    throw std::invalid_argument("config: bad integer value for " + key + ": " + v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (...) {
    throw std::invalid_argument("config: bad seed value for " + key + ": " + v);
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double d) {
  std::ostringstream os;
  os << std::setprecision(17) << d;
  return os.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, const F& fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value at line " + std::to_string(line_no));
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig make_run_config(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [key, v] : overrides) {
    auto& d = cfg.data;
    if (key == "system.n_t") d.sys.n_t = to_int(key, v);
    else if (key == "system.n_rf") d.sys.n_rf = to_int(key, v);
    else if (key == "system.n_s") d.sys.n_s = to_int(key, v);
    else if (key == "system.users") d.sys.n_users = to_int(key, v);
    else if (key == "system.f_c_ghz") d.sys.f_c_ghz = to_double(key, v);
    else if (key == "system.bandwidth_hz") d.sys.bandwidth_hz = to_double(key, v);
    else if (key == "system.ps_bits") d.sys.ps_bits = to_int(key, v);
    else if (key == "system.h_t") d.sys.h_t = to_double(key, v);
    else if (key == "system.h_r") d.sys.h_r = to_double(key, v);
    else if (key == "scene.n_vehicles") d.scene.n_vehicles = to_int(key, v);
    else if (key == "scene.road_x_min") d.scene.road_x_min = to_double(key, v);
    else if (key == "scene.road_x_max") d.scene.road_x_max = to_double(key, v);
    else if (key == "scene.road_y_min") d.scene.road_y_min = to_double(key, v);
    else if (key == "scene.road_y_max") d.scene.road_y_max = to_double(key, v);
    else if (key == "lidar.a_h_deg") d.lidar.a_h_deg = to_double(key, v);
    else if (key == "lidar.f_up_deg") d.lidar.f_up_deg = to_double(key, v);
    else if (key == "lidar.f_down_deg") d.lidar.f_down_deg = to_double(key, v);
    else if (key == "lidar.m_b") d.lidar.m_b = to_int(key, v);
    else if (key == "lidar.max_range") d.lidar.max_range = to_double(key, v);
    else if (key == "cluster.eps") d.cluster.eps = to_double(key, v);
    else if (key == "cluster.min_pts") d.cluster.min_pts = to_int(key, v);
    else if (key == "cluster.scatterer_radius") d.cluster.scatterer_radius = to_double(key, v);
    else if (key == "cluster.rx_match_radius") d.cluster.rx_match_radius = to_double(key, v);
    else if (key == "pilots.k_p") d.dims.k_p = to_int(key, v);
    else if (key == "pilots.n_p") d.dims.n_p = to_int(key, v);
    else if (key == "codebook.d") d.dims.d = to_int(key, v);
    else if (key == "codebook.n_w") d.n_w = to_int(key, v);
    else if (key == "model.feat") d.dims.feat = to_int(key, v);
    else if (key == "model.crop_w") d.dims.crop_w = to_int(key, v);
    else if (key == "model.afwc_hidden") d.dims.afwc_hidden = to_int(key, v);
    else if (key == "model.mlp_hidden") d.dims.mlp_hidden = to_int(key, v);
    else if (key == "dataset.n_train") d.n_train = to_int(key, v);
    else if (key == "dataset.n_val") d.n_val = to_int(key, v);
    else if (key == "dataset.n_test") d.n_test = to_int(key, v);
    else if (key == "dataset.snr_min_db") d.snr_min_db = to_double(key, v);
    else if (key == "dataset.snr_max_db") d.snr_max_db = to_double(key, v);
    else if (key == "train.batch_size") cfg.train.batch_size = to_int(key, v);
    else if (key == "train.lr0") cfg.train.lr0 = to_double(key, v);
    else if (key == "train.decay") cfg.train.decay = to_double(key, v);
    else if (key == "train.epochs") cfg.train.epochs = to_int(key, v);
    else if (key == "train.milestones") {
      cfg.train.milestones.clear();
      for (const std::string& m : split_list(v)) cfg.train.milestones.push_back(to_int(key, m));
    } else if (key == "grid.snr_points_db") {
      cfg.grid.snr_points_db.clear();
      for (const std::string& m : split_list(v)) cfg.grid.snr_points_db.push_back(to_double(key, m));
    } else if (key == "grid.budgets") {
      cfg.grid.measurement_budgets.clear();
      for (const std::string& m : split_list(v))
        cfg.grid.measurement_budgets.push_back(to_int(key, m));
    } else if (key == "grid.schemes") {
      cfg.grid.schemes = split_list(v);
    } else if (key == "grid.realizations") cfg.grid.realizations = to_int(key, v);
    else if (key == "grid.se_total_symbols") cfg.grid.se_total_symbols = to_int(key, v);
    else if (key == "grid.omp_sparsity") cfg.grid.omp_sparsity = to_int(key, v);
    else if (key == "seed") d.seed = to_u64(key, v);
    else if (key == "out_dir") cfg.out_dir = v;
    else throw std::invalid_argument("config: unknown key " + key);
  }
  // Dimensions shared with the system configuration are derived, not set.
  cfg.data.dims.n_t = cfg.data.sys.n_t;
  cfg.data.dims.n_s = cfg.data.sys.n_s;
  cfg.data.dims.crop_h = cfg.data.lidar.m_b;
  cfg.data.scene.tx_position.z() = cfg.data.sys.h_t;
  cfg.data.scene.rx_height = cfg.data.sys.h_r;
  cfg.data.lidar.mount_position = cfg.data.scene.tx_position;
  cfg.data.sys.validate();
  cfg.data.lidar.validate();
  cfg.train.validate();
  cfg.grid.validate();
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  const auto& d = cfg.data;
  std::ostringstream os;
  os << "seed=" << d.seed << "\n";
  os << "[system]\n"
     << "n_t=" << d.sys.n_t << "\nn_rf=" << d.sys.n_rf << "\nn_s=" << d.sys.n_s
     << "\nusers=" << d.sys.n_users << "\nf_c_ghz=" << num(d.sys.f_c_ghz)
     << "\nbandwidth_hz=" << num(d.sys.bandwidth_hz) << "\nps_bits=" << d.sys.ps_bits
     << "\nh_t=" << num(d.sys.h_t) << "\nh_r=" << num(d.sys.h_r) << "\n";
  os << "[scene]\n"
     << "n_vehicles=" << d.scene.n_vehicles << "\nroad_x_min=" << num(d.scene.road_x_min)
     << "\nroad_x_max=" << num(d.scene.road_x_max) << "\nroad_y_min=" << num(d.scene.road_y_min)
     << "\nroad_y_max=" << num(d.scene.road_y_max) << "\n";
  os << "[lidar]\n"
     << "a_h_deg=" << num(d.lidar.a_h_deg) << "\nf_up_deg=" << num(d.lidar.f_up_deg)
     << "\nf_down_deg=" << num(d.lidar.f_down_deg) << "\nm_b=" << d.lidar.m_b
     << "\nmax_range=" << num(d.lidar.max_range) << "\n";
  os << "[cluster]\n"
     << "eps=" << num(d.cluster.eps) << "\nmin_pts=" << d.cluster.min_pts
     << "\nscatterer_radius=" << num(d.cluster.scatterer_radius)
     << "\nrx_match_radius=" << num(d.cluster.rx_match_radius) << "\n";
  os << "[pilots]\n"
     << "k_p=" << d.dims.k_p << "\nn_p=" << d.dims.n_p << "\n";
  os << "[codebook]\n"
     << "d=" << d.dims.d << "\nn_w=" << d.n_w << "\n";
  os << "[model]\n"
     << "feat=" << d.dims.feat << "\ncrop_w=" << d.dims.crop_w
     << "\nafwc_hidden=" << d.dims.afwc_hidden << "\nmlp_hidden=" << d.dims.mlp_hidden << "\n";
  os << "[dataset]\n"
     << "n_train=" << d.n_train << "\nn_val=" << d.n_val << "\nn_test=" << d.n_test
     << "\nsnr_min_db=" << num(d.snr_min_db) << "\nsnr_max_db=" << num(d.snr_max_db) << "\n";
  os << "[train]\n"
     << "batch_size=" << cfg.train.batch_size << "\nlr0=" << num(cfg.train.lr0)
     << "\ndecay=" << num(cfg.train.decay) << "\nepochs=" << cfg.train.epochs << "\nmilestones="
     << join(cfg.train.milestones, [](int m) { return std::to_string(m); }) << "\n";
  os << "[grid]\n"
     << "snr_points_db=" << join(cfg.grid.snr_points_db, [](double s) { return num(s); })
     << "\nbudgets="
     << join(cfg.grid.measurement_budgets, [](int b) { return std::to_string(b); })
     << "\nschemes=" << join(cfg.grid.schemes, [](const std::string& s) { return s; })
     << "\nrealizations=" << cfg.grid.realizations
     << "\nse_total_symbols=" << cfg.grid.se_total_symbols
     << "\nomp_sparsity=" << cfg.grid.omp_sparsity << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace lecln::io
