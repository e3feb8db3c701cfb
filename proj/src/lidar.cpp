// SPDX-License-Identifier: Apache-2.0

#include "lecln/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace lecln {

PointCloud filter_ground(const PointCloud& pc, double z_tol, double mount_z) {
  if (z_tol <= 0.0) throw std::invalid_argument("filter_ground: z_tol > 0");
  PointCloud out;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    if (pc.hit_box_index[i] == kGroundHit) continue;
    if (std::abs(pc.points[i].z() + mount_z) <= z_tol) continue;
    out.points.push_back(pc.points[i]);
    out.hit_box_index.push_back(pc.hit_box_index[i]);
  }
  return out;
}

namespace {

struct CellHash {
  std::size_t operator()(const std::array<long, 3>& c) const {
    std::size_t h = 1469598103934665603ULL;
    for (long v : c) {
      h ^= static_cast<std::size_t>(v);
      h *= 1099511628211ULL;
    }
    return h;
  }
};

class NeighborGrid {
 public:
  NeighborGrid(const std::vector<Vec3>& pts, double eps) : pts_(pts), eps_(eps) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[cell_of(pts[i])].push_back(static_cast<int>(i));
  }

  std::vector<int> query(int idx) const {
    const Vec3& p = pts_[static_cast<std::size_t>(idx)];
    const auto c = cell_of(p);
    std::vector<int> out;
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == cells_.end()) continue;
          for (int j : it->second)
            if ((pts_[static_cast<std::size_t>(j)] - p).norm() <= eps_) out.push_back(j);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::array<long, 3> cell_of(const Vec3& p) const {
    return {static_cast<long>(std::floor(p.x() / eps_)),
            static_cast<long>(std::floor(p.y() / eps_)),
            static_cast<long>(std::floor(p.z() / eps_))};
  }
  const std::vector<Vec3>& pts_;
  double eps_;
  std::unordered_map<std::array<long, 3>, std::vector<int>, CellHash> cells_;
};

}  // namespace

std::vector<int> dbscan(const PointCloud& pc, double eps, int min_pts, int* n_clusters) {
  if (eps <= 0.0 || min_pts < 1) throw std::invalid_argument("dbscan: eps > 0 and min_pts >= 1");
  const int n = static_cast<int>(pc.points.size());
  std::vector<int> label(static_cast<std::size_t>(n), kNoiseCluster);
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  NeighborGrid grid(pc.points, eps);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (visited[static_cast<std::size_t>(i)]) continue;
    visited[static_cast<std::size_t>(i)] = 1;
    std::vector<int> seed = grid.query(i);
    if (static_cast<int>(seed.size()) < min_pts) continue;  // noise unless later reachable
    const int cluster = next++;
    label[static_cast<std::size_t>(i)] = cluster;
    std::deque<int> queue(seed.begin(), seed.end());
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      if (label[static_cast<std::size_t>(j)] == kNoiseCluster) label[static_cast<std::size_t>(j)] = cluster;
      if (visited[static_cast<std::size_t>(j)]) continue;
      visited[static_cast<std::size_t>(j)] = 1;
      label[static_cast<std::size_t>(j)] = cluster;
      std::vector<int> nb = grid.query(j);
      if (static_cast<int>(nb.size()) >= min_pts)
        for (int k : nb) queue.push_back(k);
    }
  }
  if (n_clusters) *n_clusters = next;
  return label;
}

ClusterLabels label_clusters(const std::vector<int>& assignment, const PointCloud& pc,
                             const Scene& scene, const ClusterParams& params) {
  int n_clusters = 0;
  for (int a : assignment) n_clusters = std::max(n_clusters, a + 1);
  if (n_clusters == 0) throw std::runtime_error("receiver not detected");

  // Points are in the sensor frame; work relative to the mount (= tx position).
  const Vec3 rx_rel = scene.rx_position - scene.tx_position;

  std::vector<Vec3> centroid(static_cast<std::size_t>(n_clusters), Vec3::Zero());
  std::vector<int> count(static_cast<std::size_t>(n_clusters), 0);
  std::vector<std::unordered_map<int, int>> box_votes(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int c = assignment[i];
    if (c < 0) continue;
    centroid[static_cast<std::size_t>(c)] += pc.points[i];
    ++count[static_cast<std::size_t>(c)];
    ++box_votes[static_cast<std::size_t>(c)][pc.hit_box_index[i]];
  }
  for (int c = 0; c < n_clusters; ++c)
    if (count[static_cast<std::size_t>(c)] > 0) centroid[static_cast<std::size_t>(c)] /= count[static_cast<std::size_t>(c)];

  int rx_cluster = -1;
  double best = params.rx_match_radius;
  for (int c = 0; c < n_clusters; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) continue;
    const double d = (centroid[static_cast<std::size_t>(c)] - rx_rel).head<2>().norm();
    if (d < best) { best = d; rx_cluster = c; }
  }
  if (rx_cluster < 0) throw std::runtime_error("receiver not detected");

  auto majority_box = [&](int c) {
    int box = -1, votes = -1;
    for (const auto& [b, v] : box_votes[static_cast<std::size_t>(c)])
      if (v > votes || (v == votes && b < box)) { box = b; votes = v; }
    return box;
  };

  ClusterLabels out;
  out.assignment = assignment;
  out.n_clusters = n_clusters;
  const Vec3& rx_c = centroid[static_cast<std::size_t>(rx_cluster)];
  std::vector<char> is_scatterer(static_cast<std::size_t>(n_clusters), 0);
  for (int c = 0; c < n_clusters; ++c) {
    if (c == rx_cluster || count[static_cast<std::size_t>(c)] == 0) continue;
    const int box = majority_box(c);
    const bool vehicle = box >= 0 && box < static_cast<int>(scene.boxes.size()) &&
                         scene.boxes[static_cast<std::size_t>(box)].label == BoxLabel::Vehicle;
    if (vehicle && (centroid[static_cast<std::size_t>(c)] - rx_c).head<2>().norm() <= params.scatterer_radius)
      is_scatterer[static_cast<std::size_t>(c)] = 1;
  }
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == rx_cluster) out.receiver_set.push_back(static_cast<int>(i));
    else if (assignment[i] >= 0 && is_scatterer[static_cast<std::size_t>(assignment[i])])
      out.scatterer_set.push_back(static_cast<int>(i));
  }
  out.rx_azimuth = std::atan2(rx_c.y(), rx_c.x());
  out.theta_k = steering_from_azimuth(out.rx_azimuth);
  return out;
}

RangeImage range_project(const PointCloud& pc, const LidarConfig& cfg) {
  cfg.validate();
  const int w = cfg.image_width();
  const int h = cfg.image_height();
  RangeImage ri;
  ri.cfg = cfg;
  ri.pixels = Mat::Zero(h, w);
  ri.point_of.assign(static_cast<std::size_t>(h) * w, -1);
  const double deg = kPi / 180.0;
  const double f_up = cfg.f_up_deg * deg;
  const double f = cfg.fov_deg() * deg;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const Vec3& p = pc.points[i];
    const double r = p.norm();
    if (r <= 0.0) continue;
    int u = static_cast<int>(std::floor(0.5 * (1.0 - std::atan2(p.y(), p.x()) / kPi) * w));
    int v = static_cast<int>(std::floor((1.0 - (std::asin(p.z() / r) + f_up) / f) * h));
    u = std::clamp(u, 0, w - 1);
    v = std::clamp(v, 0, h - 1);
    double& pix = ri.pixels(v, u);
    if (pix == 0.0 || r < pix) {
      pix = r;
      ri.point_of[static_cast<std::size_t>(v) * w + u] = static_cast<int>(i);
    }
  }
  return ri;
}

SpFeatureImage sp_feature_image(const RangeImage& ri, const ClusterLabels& labels,
                                const PointCloud& pc, const SystemConfig& sys) {
  const int h = static_cast<int>(ri.pixels.rows());
  const int w = static_cast<int>(ri.pixels.cols());
  std::vector<char> in_rx(pc.points.size(), 0), in_sc(pc.points.size(), 0);
  for (int i : labels.receiver_set) in_rx[static_cast<std::size_t>(i)] = 1;
  for (int i : labels.scatterer_set) in_sc[static_cast<std::size_t>(i)] = 1;

  SpFeatureImage img;
  img.cfg = ri.cfg;
  img.data.assign(3, Mat::Zero(h, w));
  img.data[0] = ri.pixels;
  const double pl_const = 20.0 * std::log10(sys.f_c_ghz) - 20.0 * std::log10(sys.h_t * sys.h_r);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double r = ri.pixels(v, u);
      if (r <= 0.0) continue;
      const int pt = ri.point_of[static_cast<std::size_t>(v) * w + u];
      if (pt >= 0) {
        if (in_rx[static_cast<std::size_t>(pt)]) img.data[1](v, u) = 2.0;
        else if (in_sc[static_cast<std::size_t>(pt)]) img.data[1](v, u) = 1.0;
      }
      img.data[2](v, u) = 40.0 * std::log10(r) + pl_const;
    }
  return img;
}

int azimuth_column(const LidarConfig& cfg, double azimuth) {
  const int w = cfg.image_width();
  int u = static_cast<int>(std::floor(0.5 * (1.0 - azimuth / kPi) * w));
  return std::clamp(u, 0, w - 1);
}

std::vector<double> crop_feature_image(const SpFeatureImage& img, double center_azimuth, int crop_w) {
  const int h = static_cast<int>(img.data[0].rows());
  const int w = static_cast<int>(img.data[0].cols());
  const int center = azimuth_column(img.cfg, center_azimuth);
  std::vector<double> out(static_cast<std::size_t>(3 * h * crop_w));
  for (int ch = 0; ch < 3; ++ch)
    for (int v = 0; v < h; ++v)
      for (int c = 0; c < crop_w; ++c) {
        int u = center - crop_w / 2 + c;
        u = ((u % w) + w) % w;  // cylindrical azimuth
        out[static_cast<std::size_t>((ch * h + v) * crop_w + c)] = img.data[static_cast<std::size_t>(ch)](v, u);
      }
  return out;
}

std::string channel_to_pgm(const Mat& plane) {
  const double lo = plane.minCoeff();
  const double hi = plane.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ostringstream os;
  os << "P2\n" << plane.cols() << ' ' << plane.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < plane.rows(); ++r) {
    for (Eigen::Index c = 0; c < plane.cols(); ++c)
      os << static_cast<int>(std::lround((plane(r, c) - lo) * scale)) << (c + 1 == plane.cols() ? '\n' : ' ');
  }
  return os.str();
}

}  // namespace lecln
