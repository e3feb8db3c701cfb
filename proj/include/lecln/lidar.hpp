// SPDX-License-Identifier: Apache-2.0
//
// Coarse LiDAR processing (ground filtering, DBSCAN, cluster labeling) and
// the multi-feature superposed range image.

#ifndef LECLN_LIDAR_HPP
#define LECLN_LIDAR_HPP

#include <string>
#include <vector>

#include "lecln/scene.hpp"
#include "lecln/types.hpp"

namespace lecln {

inline constexpr int kNoiseCluster = -1;

struct ClusterLabels {
  std::vector<int> assignment;       // per point: cluster id or kNoiseCluster
  std::vector<int> receiver_set;     // point indices in the receiver cluster
  std::vector<int> scatterer_set;    // point indices in nearby vehicle clusters
  double theta_k = 0.0;              // coarse receiver steering value
  double rx_azimuth = 0.0;           // receiver centroid azimuth, radians
  int n_clusters = 0;
};

struct RangeImage {
  Mat pixels;                 // h x w, 0 = empty
  std::vector<int> point_of;  // winning point index per pixel (row-major), -1 = empty
  LidarConfig cfg;
};

// 3 x h x w: channel 0 range, channel 1 labels {0,1,2}, channel 2 path loss dB.
struct SpFeatureImage {
  std::vector<Mat> data;  // three h x w planes
  LidarConfig cfg;
};

// Removes ground-sentinel points and points with |world z| <= z_tol.
PointCloud filter_ground(const PointCloud& pc, double z_tol, double mount_z = 0.0);

// Density-based clustering; deterministic for a fixed point order. Returns the
// per-point cluster id (or kNoiseCluster) and writes the cluster count.
std::vector<int> dbscan(const PointCloud& pc, double eps, int min_pts, int* n_clusters = nullptr);

struct ClusterParams {
  double eps = 1.0;
  int min_pts = 8;
  double scatterer_radius = 10.0;  // rho
  double rx_match_radius = 5.0;    // rho_match
};

// Identifies the receiver cluster (centroid nearest the known rx position),
// nearby vehicle clusters as scatterers, and the coarse angle theta_k.
ClusterLabels label_clusters(const std::vector<int>& assignment, const PointCloud& pc,
                             const Scene& scene, const ClusterParams& params = {});

// Spherical projection; nearest range wins pixel collisions.
RangeImage range_project(const PointCloud& pc, const LidarConfig& cfg);

SpFeatureImage sp_feature_image(const RangeImage& ri, const ClusterLabels& labels,
                                const PointCloud& pc, const SystemConfig& sys);

// Image column of a geometric azimuth under the spherical projection.
int azimuth_column(const LidarConfig& cfg, double azimuth);

// Crop 3 x h x crop_w centered on the given azimuth column, cylindrical wrap,
// flattened row-major over (channel, row, col).
std::vector<double> crop_feature_image(const SpFeatureImage& img, double center_azimuth, int crop_w);

// PGM grayscale export of one channel with linear scaling to [0, 255].
std::string channel_to_pgm(const Mat& plane);

}  // namespace lecln

#endif  // LECLN_LIDAR_HPP
