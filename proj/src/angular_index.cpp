#include <algorithm>
#include <cmath>
#include <numbers>

#include "liftwatch/errors.hpp"
#include "liftwatch/pointcloud.hpp"

namespace liftwatch {

namespace {

constexpr std::int64_t kKeyBias = std::int64_t{1} << 20;
// Slack on the cone's bounding cube; absorbs rounding in the unit vectors.
constexpr double kChordSlack = 1e-9;
constexpr std::size_t kMaxCellsPerQuery = 20000;

std::uint64_t pack(std::int64_t i, std::int64_t j, std::int64_t k) {
  const auto f = [](std::int64_t v) {
    return static_cast<std::uint64_t>(v + kKeyBias) & ((std::uint64_t{1} << 21) - 1);
  };
  return (f(i) << 42) | (f(j) << 21) | f(k);
}

std::int64_t cell_coord(double x, double h) {
  return static_cast<std::int64_t>(std::floor(x / h));
}

}  // namespace

AngularIndex::AngularIndex(const PointCloud& cloud, const Eigen::Vector3d& origin,
                           double cell_angle)
    : origin_(origin), cell_(std::max(cell_angle, 1e-5)) {
  if (!(cell_angle > 0.0)) throw DomainError("AngularIndex: cell_angle must be > 0");
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d rel = cloud.points[i] - origin_;
    const double n = rel.norm();
    if (!(n > 0.0)) continue;
    const Eigen::Vector3d u = rel / n;
    const auto id = static_cast<std::uint32_t>(points_.size());
    points_.push_back(cloud.points[i]);
    source_index_.push_back(i);
    keyed.emplace_back(pack(cell_coord(u.x(), cell_), cell_coord(u.y(), cell_),
                            cell_coord(u.z(), cell_)),
                       id);
  }
  std::sort(keyed.begin(), keyed.end());
  order_.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      order_.push_back(keyed[j].second);
      ++j;
    }
    cells_.emplace(keyed[i].first, std::make_pair(static_cast<std::uint32_t>(i),
                                                  static_cast<std::uint32_t>(j)));
    i = j;
  }
}

AngleMatch AngularIndex::match_at(std::size_t i, const Eigen::Vector3d& ray_dir) const {
  const Eigen::Vector3d rel = points_[i] - origin_;
  return {source_index_[i], points_[i], angle_distance(ray_dir, rel), rel.norm()};
}

template <typename Visit>
void AngularIndex::visit_cone(const Eigen::Vector3d& ray_dir, double theta_max,
                              Visit&& visit) const {
  const double theta = std::min(theta_max, std::numbers::pi);
  const double chord = 2.0 * std::sin(theta / 2.0) + kChordSlack;
  std::array<std::int64_t, 3> lo{}, hi{};
  std::size_t cells = 1;
  for (int a = 0; a < 3; ++a) {
    lo[a] = cell_coord(ray_dir[a] - chord, cell_);
    hi[a] = cell_coord(ray_dir[a] + chord, cell_);
    cells *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
  }
  if (cells > kMaxCellsPerQuery || cells > points_.size()) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const AngleMatch m = match_at(i, ray_dir);
      if (m.angle <= theta_max) visit(m);
    }
    return;
  }
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        const auto it = cells_.find(pack(x, y, z));
        if (it == cells_.end()) continue;
        for (std::uint32_t k = it->second.first; k < it->second.second; ++k) {
          const AngleMatch m = match_at(order_[k], ray_dir);
          if (m.angle <= theta_max) visit(m);
        }
      }
    }
  }
}

std::optional<AngleMatch> AngularIndex::nearest_within(const Eigen::Vector3d& ray_dir,
                                                       double theta_max) const {
  std::optional<AngleMatch> best;
  visit_cone(ray_dir, theta_max, [&best](const AngleMatch& m) {
    if (!best || angle_match_less(m, *best)) best = m;
  });
  return best;
}

AngleMatch AngularIndex::nearest(const Eigen::Vector3d& ray_dir) const {
  if (points_.empty()) throw NoDataError("AngularIndex::nearest: empty index");
  // Any point inside a cone that holds at least one match beats everything
  // outside it, so widening until a hit is exact.
  for (double theta = cell_; theta < 0.5; theta *= 2.0) {
    if (auto m = nearest_within(ray_dir, theta)) return *m;
  }
  return *nearest_within(ray_dir, std::numbers::pi);
}

std::vector<AngleMatch> AngularIndex::within(const Eigen::Vector3d& ray_dir,
                                             double theta_max) const {
  if (!(theta_max > 0.0)) throw DomainError("AngularIndex::within: theta_max must be > 0");
  std::vector<AngleMatch> out;
  visit_cone(ray_dir, theta_max, [&out](const AngleMatch& m) { out.push_back(m); });
  std::sort(out.begin(), out.end(), angle_match_less);
  return out;
}

}  // namespace liftwatch
