// SPDX-License-Identifier: Apache-2.0
//
// Synthetic urban scene: one shared geometry produces both the LiDAR point
// cloud (ray casting) and the wireless propagation paths, so the two
// modalities stay correlated by construction.

#ifndef LECLN_SCENE_HPP
#define LECLN_SCENE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lecln/types.hpp"

namespace lecln {

enum class BoxLabel { Vehicle, Building };

// Axis-aligned box resting on the ground plane (z in [lo.z, hi.z]).
struct Box {
  Vec3 lo;
  Vec3 hi;
  BoxLabel label = BoxLabel::Vehicle;

  Vec3 center() const { return 0.5 * (lo + hi); }
  bool contains_xy(double x, double y, double margin = 0.0) const {
    return x >= lo.x() - margin && x <= hi.x() + margin &&
           y >= lo.y() - margin && y <= hi.y() + margin;
  }
};

struct SceneSpec {
  std::uint64_t rng_seed = 1;
  // Road rectangle in which vehicles are placed.
  double road_x_min = -40.0, road_x_max = 40.0;
  double road_y_min = -8.0, road_y_max = 8.0;
  int n_vehicles = 6;
  // Vehicle box dimension ranges (length, width, height), meters.
  double veh_len_min = 3.5, veh_len_max = 5.0;
  double veh_wid_min = 1.8, veh_wid_max = 2.2;
  double veh_hgt_min = 1.4, veh_hgt_max = 1.8;
  std::vector<Box> building_boxes;  // empty => defaults below
  bool default_buildings = true;
  Vec3 tx_position{0.0, 10.0, 5.0};  // BS / LiDAR mount, h_t = 5 m
  double rx_height = 1.0;            // h_r: receiver antenna height
  int rx_vehicle_index = -1;         // -1: pick from the seed
  int max_place_retries = 200;
};

struct Scene {
  std::vector<Box> boxes;  // vehicles first, then buildings
  Vec3 tx_position;
  Vec3 rx_position;
  int rx_box_index = 0;
  std::uint64_t seed = 0;
  int n_vehicles = 0;  // boxes[0..n_vehicles) are vehicles
};

struct LidarConfig {
  double a_h_deg = 0.36;     // horizontal angular resolution
  double f_up_deg = 15.0;    // upward FoV
  double f_down_deg = 25.0;  // downward FoV (magnitude)
  int m_b = 64;              // beam count
  double max_range = 200.0;  // meters
  Vec3 mount_position{0.0, 10.0, 5.0};

  int image_width() const;
  int image_height() const { return m_b; }
  double fov_deg() const { return f_up_deg + f_down_deg; }
  void validate() const;
};

inline constexpr int kGroundHit = -1;

struct PointCloud {
  std::vector<Vec3> points;        // sensor-frame coordinates (origin at mount)
  std::vector<int> hit_box_index;  // index into Scene::boxes, or kGroundHit
};

// Places vehicles by rejection sampling; deterministic per seed.
// Throws std::runtime_error("scene infeasible") when placement cannot succeed.
Scene build_scene(const SceneSpec& spec);

// One ray per (azimuth bin center, beam); nearest box/ground hit within range.
PointCloud raycast_lidar(const Scene& scene, const LidarConfig& cfg);

// LoS (when unblocked) plus single-bounce reflections off vertical faces of
// vehicle boxes near the receiver, capped at max_paths. Delays are normalized
// to the sampling interval and referenced to the first arrival.
std::vector<ChannelPath> derive_paths(const Scene& scene, const SystemConfig& sys,
                                      int max_paths = 8);

// Ray/axis-aligned-box intersection (slab test). Returns smallest t >= 0 with
// origin + t*dir on the box, or a negative value when there is no hit.
double ray_box_intersect(const Vec3& origin, const Vec3& dir, const Box& box);

// True when the open segment a..b passes through the box interior.
bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box);

// ASCII "x y z label" export for external viewers.
std::string point_cloud_to_xyz(const PointCloud& pc);

}  // namespace lecln

#endif  // LECLN_SCENE_HPP
