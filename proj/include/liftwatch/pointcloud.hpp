#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "liftwatch/geometry.hpp"

namespace liftwatch {

/// One LiDAR sweep. Every point is in the LiDAR frame.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  double timestamp = 0.0;  // seconds, monotonic
  std::string source_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Point3 at(std::size_t i) const { return {points.at(i), Frame::Lidar}; }
};

struct PreprocessConfig {
  double zero_epsilon = 1e-6;  // returns with |p| below this are dropped
  double voxel_leaf = 0.05;    // voxel edge, meters

  void validate() const;
};

/// Zero-value removal followed by voxel-centroid downsampling. Voxels are
/// emitted in order of first occurrence, so the result is deterministic.
PointCloud preprocess(const PointCloud& cloud, const PreprocessConfig& cfg);

/// Interior angle at the origin between `ray_dir` (unit) and the point `m`.
/// Throws GeometryError when m is the origin.
double angle_distance(const Eigen::Vector3d& ray_dir, const Eigen::Vector3d& m);

/// Angle between the ray and `m` seen from the ray's origin.
double angle_distance(const LidarRay& ray, const Eigen::Vector3d& m);

struct AngleMatch {
  std::size_t index = 0;  // into the searched cloud
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double angle = 0.0;
  double range = 0.0;  // distance from the ray origin
};

/// Strict ordering used by every search: smaller angle first, then nearer
/// range, then lower index.
bool angle_match_less(const AngleMatch& a, const AngleMatch& b);

/// Exhaustive search for the point with the smallest angle distance. Points
/// coincident with the ray origin are skipped. Throws NoDataError when nothing
/// remains.
AngleMatch nearest_by_angle(const PointCloud& cloud, const LidarRay& ray);
AngleMatch nearest_by_angle(const PointCloud& cloud, const Eigen::Vector3d& ray_dir);

/// Every point within `theta_max` of the ray, sorted by angle_match_less.
std::vector<AngleMatch> candidates_within_angle(const PointCloud& cloud,
                                                const LidarRay& ray,
                                                double theta_max);
std::vector<AngleMatch> candidates_within_angle(const PointCloud& cloud,
                                                const Eigen::Vector3d& ray_dir,
                                                double theta_max);

/// Buckets the unit directions (seen from `origin`) of a cloud's points on a
/// regular 3D grid with cell edge `cell_angle`. Queries return exactly what the
/// exhaustive functions above return. The index keeps a copy of the points, so
/// it does not reference the source cloud.
class AngularIndex {
 public:
  AngularIndex(const PointCloud& cloud, const Eigen::Vector3d& origin,
               double cell_angle);

  const Eigen::Vector3d& origin() const { return origin_; }
  std::size_t size() const { return points_.size(); }

  /// Best match with angle <= theta_max, if any.
  std::optional<AngleMatch> nearest_within(const Eigen::Vector3d& ray_dir,
                                           double theta_max) const;

  /// Best match overall. Throws NoDataError for an empty index.
  AngleMatch nearest(const Eigen::Vector3d& ray_dir) const;

  std::vector<AngleMatch> within(const Eigen::Vector3d& ray_dir,
                                 double theta_max) const;

 private:
  template <typename Visit>
  void visit_cone(const Eigen::Vector3d& ray_dir, double theta_max,
                  Visit&& visit) const;
  AngleMatch match_at(std::size_t i, const Eigen::Vector3d& ray_dir) const;

  Eigen::Vector3d origin_;
  double cell_;
  std::vector<Eigen::Vector3d> points_;  // original coordinates, origin points removed
  std::vector<std::size_t> source_index_;
  std::vector<std::uint32_t> order_;  // point ids grouped by cell
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells_;
};

// Point cloud files.
//   CSV:    "x,y,z" per line, meters.
//   Binary: little-endian; magic "LWPC", uint32 version (1), uint64 count,
//           then count float32 triplets.
PointCloud read_cloud_csv(const std::filesystem::path& path);
void write_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_cloud_binary(const std::filesystem::path& path);
void write_cloud_binary(const PointCloud& cloud, const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is text, anything else binary.
PointCloud read_cloud(const std::filesystem::path& path);

}  // namespace liftwatch
