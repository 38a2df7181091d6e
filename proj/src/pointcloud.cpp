#include "liftwatch/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "liftwatch/errors.hpp"

namespace liftwatch {

void PreprocessConfig::validate() const {
  if (!(zero_epsilon >= 0.0)) throw ConfigError("preprocess: zero_epsilon must be >= 0");
  if (!(voxel_leaf > 0.0)) throw ConfigError("preprocess: voxel_leaf must be > 0");
}

namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

VoxelKey voxel_of(const Eigen::Vector3d& p, double leaf) {
  return {static_cast<std::int64_t>(std::floor(p.x() / leaf)),
          static_cast<std::int64_t>(std::floor(p.y() / leaf)),
          static_cast<std::int64_t>(std::floor(p.z() / leaf))};
}

}  // namespace

PointCloud preprocess(const PointCloud& cloud, const PreprocessConfig& cfg) {
  cfg.validate();
  struct Bucket {
    VoxelKey key;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::vector<std::size_t> members;
  };
  std::vector<Bucket> buckets;
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot;
  slot.reserve(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    if (!p.allFinite() || p.norm() < cfg.zero_epsilon) continue;
    const VoxelKey key = voxel_of(p, cfg.voxel_leaf);
    auto [it, inserted] = slot.try_emplace(key, buckets.size());
    if (inserted) buckets.push_back({key, Eigen::Vector3d::Zero(), {}});
    Bucket& b = buckets[it->second];
    b.sum += p;
    b.members.push_back(i);
  }

  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.source_id = cloud.source_id;
  out.points.reserve(buckets.size());
  for (const Bucket& b : buckets) {
    Eigen::Vector3d c = b.members.size() == 1
                            ? cloud.points[b.members.front()]
                            : Eigen::Vector3d(b.sum / static_cast<double>(b.members.size()));
    // Rounding can push a centroid across a voxel face; fall back to the
    // member nearest the centroid so a second pass is a no-op.
    if (voxel_of(c, cfg.voxel_leaf) != b.key) {
      const Eigen::Vector3d target = c;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m : b.members) {
        const double d = (cloud.points[m] - target).squaredNorm();
        if (d < best) {
          best = d;
          c = cloud.points[m];
        }
      }
    }
    if (c.norm() < cfg.zero_epsilon) continue;
    out.points.push_back(c);
  }
  return out;
}

double angle_distance(const Eigen::Vector3d& ray_dir, const Eigen::Vector3d& m) {
  const double n = m.norm();
  if (!(n > 0.0)) throw GeometryError("angle_distance: point at the origin");
  const double c = ray_dir.dot(m / n);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double angle_distance(const LidarRay& ray, const Eigen::Vector3d& m) {
  return angle_distance(ray.direction, Eigen::Vector3d(m - ray.origin));
}

bool angle_match_less(const AngleMatch& a, const AngleMatch& b) {
  if (a.angle != b.angle) return a.angle < b.angle;
  if (a.range != b.range) return a.range < b.range;
  return a.index < b.index;
}

AngleMatch nearest_by_angle(const PointCloud& cloud, const LidarRay& ray) {
  std::optional<AngleMatch> best;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d rel = cloud.points[i] - ray.origin;
    const double range = rel.norm();
    if (!(range > 0.0)) continue;
    AngleMatch m{i, cloud.points[i], angle_distance(ray.direction, rel), range};
    if (!best || angle_match_less(m, *best)) best = m;
  }
  if (!best) throw NoDataError("nearest_by_angle: cloud has no usable points");
  return *best;
}

AngleMatch nearest_by_angle(const PointCloud& cloud, const Eigen::Vector3d& ray_dir) {
  return nearest_by_angle(cloud, LidarRay{Eigen::Vector3d::Zero(), ray_dir});
}

std::vector<AngleMatch> candidates_within_angle(const PointCloud& cloud,
                                                const LidarRay& ray,
                                                double theta_max) {
  if (!(theta_max > 0.0)) throw DomainError("candidates_within_angle: theta_max must be > 0");
  std::vector<AngleMatch> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d rel = cloud.points[i] - ray.origin;
    const double range = rel.norm();
    if (!(range > 0.0)) continue;
    const double a = angle_distance(ray.direction, rel);
    if (a <= theta_max) out.push_back({i, cloud.points[i], a, range});
  }
  std::sort(out.begin(), out.end(), angle_match_less);
  return out;
}

std::vector<AngleMatch> candidates_within_angle(const PointCloud& cloud,
                                                const Eigen::Vector3d& ray_dir,
                                                double theta_max) {
  return candidates_within_angle(cloud, LidarRay{Eigen::Vector3d::Zero(), ray_dir},
                                 theta_max);
}

}  // namespace liftwatch
