// SPDX-License-Identifier: Apache-2.0

#include "lecln/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lecln {

int LidarConfig::image_width() const {
  double w = 360.0 / a_h_deg;
  double rounded = std::round(w);
  if (std::abs(w - rounded) > 1e-9) throw std::invalid_argument("LidarConfig: 360/a_h must be an integer");
  return static_cast<int>(rounded);
}

void LidarConfig::validate() const {
  (void)image_width();
  if (fov_deg() <= 0.0) throw std::invalid_argument("LidarConfig: f_up + f_down must be positive");
  if (m_b <= 0) throw std::invalid_argument("LidarConfig: beam count must be positive");
  if (max_range <= 0.0) throw std::invalid_argument("LidarConfig: max_range must be positive");
}

namespace {

bool boxes_overlap_xy(const Box& a, const Box& b, double margin) {
  return a.lo.x() - margin < b.hi.x() && b.lo.x() - margin < a.hi.x() &&
         a.lo.y() - margin < b.hi.y() && b.lo.y() - margin < a.hi.y();
}

std::vector<Box> default_building_boxes() {
  // Two building rows flanking the road, far enough out that the LoS from
  // the elevated BS is only occasionally grazed.
  std::vector<Box> b;
  b.push_back({Vec3(-40.0, 16.0, 0.0), Vec3(-12.0, 30.0, 15.0), BoxLabel::Building});
  b.push_back({Vec3(12.0, 16.0, 0.0), Vec3(40.0, 30.0, 15.0), BoxLabel::Building});
  b.push_back({Vec3(-40.0, -30.0, 0.0), Vec3(40.0, -16.0, 15.0), BoxLabel::Building});
  return b;
}

}  // namespace

Scene build_scene(const SceneSpec& spec) {
  if (spec.n_vehicles < 1) throw std::invalid_argument("build_scene: need at least one vehicle");
  Rng rng(spec.rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Scene scene;
  scene.seed = spec.rng_seed;
  scene.tx_position = spec.tx_position;
  scene.n_vehicles = spec.n_vehicles;

  const int rx_index = spec.rx_vehicle_index >= 0
                           ? spec.rx_vehicle_index
                           : static_cast<int>(rng() % static_cast<std::uint64_t>(spec.n_vehicles));
  if (rx_index >= spec.n_vehicles) throw std::invalid_argument("build_scene: rx_vehicle_index out of range");

  for (int v = 0; v < spec.n_vehicles; ++v) {
    const double len = spec.veh_len_min + (spec.veh_len_max - spec.veh_len_min) * u01(rng);
    const double wid = spec.veh_wid_min + (spec.veh_wid_max - spec.veh_wid_min) * u01(rng);
    const double hgt = v == rx_index
                           ? spec.rx_height
                           : spec.veh_hgt_min + (spec.veh_hgt_max - spec.veh_hgt_min) * u01(rng);
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_place_retries && !placed; ++attempt) {
      const double cx = spec.road_x_min + len / 2 +
                        (spec.road_x_max - spec.road_x_min - len) * u01(rng);
      const double cy = spec.road_y_min + wid / 2 +
                        (spec.road_y_max - spec.road_y_min - wid) * u01(rng);
      if (spec.road_x_max - spec.road_x_min < len || spec.road_y_max - spec.road_y_min < wid)
        throw std::runtime_error("scene infeasible: vehicle larger than road");
      Box cand{Vec3(cx - len / 2, cy - wid / 2, 0.0), Vec3(cx + len / 2, cy + wid / 2, hgt),
               BoxLabel::Vehicle};
      bool collides = false;
      for (const Box& other : scene.boxes)
        if (boxes_overlap_xy(cand, other, 0.5)) { collides = true; break; }
      if (!collides) {
        scene.boxes.push_back(cand);
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("scene infeasible: vehicle placement failed");
  }

  scene.rx_box_index = rx_index;
  const Box& rxb = scene.boxes[rx_index];
  scene.rx_position = Vec3(rxb.center().x(), rxb.center().y(), rxb.hi.z());

  const std::vector<Box>& buildings =
      spec.building_boxes.empty() && spec.default_buildings ? default_building_boxes()
                                                            : spec.building_boxes;
  for (const Box& b : buildings) scene.boxes.push_back(b);
  return scene;
}

double ray_box_intersect(const Vec3& origin, const Vec3& dir, const Box& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double o = origin[axis], d = dir[axis];
    const double lo = box.lo[axis], hi = box.hi[axis];
    if (std::abs(d) < 1e-15) {
      if (o < lo || o > hi) return -1.0;
      continue;
    }
    double t0 = (lo - o) / d;
    double t1 = (hi - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return -1.0;
  }
  if (t_far < 0.0) return -1.0;
  return t_near >= 0.0 ? t_near : t_far;  // origin inside: exit face
}

bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len < 1e-12) return false;
  const double t = ray_box_intersect(a, d / len, box);
  return t > 1e-9 && t < len - 1e-9;
}

PointCloud raycast_lidar(const Scene& scene, const LidarConfig& cfg) {
  cfg.validate();
  const int w = cfg.image_width();
  const int h = cfg.image_height();
  const double deg = kPi / 180.0;
  const Vec3 origin = cfg.mount_position;

  PointCloud pc;
  pc.points.reserve(static_cast<std::size_t>(w) * h / 4);
  pc.hit_box_index.reserve(pc.points.capacity());

  for (int beam = 0; beam < h; ++beam) {
    const double elev = h == 1 ? 0.0
                               : (-cfg.f_down_deg + cfg.fov_deg() * beam / (h - 1)) * deg;
    const double ce = std::cos(elev), se = std::sin(elev);
    for (int col = 0; col < w; ++col) {
      const double az = 2.0 * kPi * (col + 0.5) / w;
      const Vec3 dir(ce * std::cos(az), ce * std::sin(az), se);
      double best_t = cfg.max_range;
      int best_box = -2;  // -2: miss
      for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
        const double t = ray_box_intersect(origin, dir, scene.boxes[b]);
        if (t > 1e-9 && t < best_t) { best_t = t; best_box = static_cast<int>(b); }
      }
      if (dir.z() < 0.0) {
        const double t = -origin.z() / dir.z();
        if (t > 1e-9 && t < best_t) { best_t = t; best_box = kGroundHit; }
      }
      if (best_box != -2) {
        pc.points.push_back(best_t * dir);  // sensor frame
        pc.hit_box_index.push_back(best_box);
      }
    }
  }
  return pc;
}

namespace {

// Mirror point p across the plane of a vertical box face.
// axis: 0 for x = value faces, 1 for y = value faces.
Vec3 mirror_across(const Vec3& p, int axis, double value) {
  Vec3 m = p;
  m[axis] = 2.0 * value - p[axis];
  return m;
}

struct Candidate {
  double length;
  double azimuth;  // departure azimuth at the BS (uplink AoA)
};

}  // namespace

std::vector<ChannelPath> derive_paths(const Scene& scene, const SystemConfig& sys, int max_paths) {
  const Vec3& tx = scene.tx_position;
  const Vec3& rx = scene.rx_position;
  std::vector<Candidate> cands;

  // LoS: blocked when any box other than the receiver's own straddles the segment.
  bool los_blocked = false;
  for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
    if (static_cast<int>(b) == scene.rx_box_index) continue;
    if (segment_hits_box(tx, rx, scene.boxes[b])) { los_blocked = true; break; }
  }
  const double los_len = (rx - tx).norm();
  if (!los_blocked) {
    cands.push_back({los_len, std::atan2(rx.y() - tx.y(), rx.x() - tx.x())});
  }

  // Single-bounce reflections off vertical faces of nearby scatterer vehicles.
  constexpr double kScattererRadius = 10.0;
  for (int v = 0; v < scene.n_vehicles; ++v) {
    if (v == scene.rx_box_index) continue;
    const Box& box = scene.boxes[v];
    if ((box.center() - rx).head<2>().norm() > kScattererRadius + 5.0) continue;
    const double face_vals[2][2] = {{box.lo.x(), box.hi.x()}, {box.lo.y(), box.hi.y()}};
    for (int axis = 0; axis < 2; ++axis) {
      for (int side = 0; side < 2; ++side) {
        const double value = face_vals[axis][side];
        // tx and rx must be on the same side of the face plane for a specular bounce.
        const double st = tx[axis] - value, sr = rx[axis] - value;
        if (st * sr <= 0.0) continue;
        const Vec3 rx_mirror = mirror_across(rx, axis, value);
        const Vec3 d = rx_mirror - tx;
        if (std::abs(d[axis]) < 1e-12) continue;
        const double t = (value - tx[axis]) / d[axis];
        if (t <= 0.0 || t >= 1.0) continue;
        const Vec3 hit = tx + t * d;
        // Reflection point must lie within the face rectangle.
        const int other = 1 - axis;
        if (hit[other] < box.lo[other] || hit[other] > box.hi[other]) continue;
        if (hit.z() < box.lo.z() || hit.z() > box.hi.z()) continue;
        cands.push_back({d.norm(), std::atan2(hit.y() - tx.y(), hit.x() - tx.x())});
      }
    }
  }

  if (cands.empty()) throw std::runtime_error("no propagation path");

  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.length < b.length; });
  if (static_cast<int>(cands.size()) > max_paths) cands.resize(max_paths);

  // Path phases come from the scene seed so the whole realization is one draw.
  Rng rng(scene.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const double t_s = sys.sample_interval_s();
  const double first_arrival = cands.front().length;
  std::vector<ChannelPath> paths;
  paths.reserve(cands.size());
  for (const Candidate& c : cands) {
    // Amplitude from the same two-ray loss law that feeds the SP-feature image.
    const double pl_db = 40.0 * std::log10(c.length) + 20.0 * std::log10(sys.f_c_ghz) -
                         20.0 * std::log10(sys.h_t * sys.h_r);
    ChannelPath p;
    p.alpha = std::pow(10.0, -pl_db / 20.0);
    p.theta = steering_from_azimuth(c.azimuth);
    p.tau = (c.length - first_arrival) / kSpeedOfLight / t_s;
    p.phi = 2.0 * kPi * u01(rng);
    paths.push_back(p);
  }
  return paths;
}

std::string point_cloud_to_xyz(const PointCloud& pc) {
  std::ostringstream os;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const Vec3& p = pc.points[i];
    os << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << pc.hit_box_index[i] << '\n';
  }
  return os.str();
}

}  // namespace lecln
