#include "liftwatch/simulator.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "liftwatch/errors.hpp"

namespace liftwatch {

namespace {

constexpr double kHitEpsilon = 1e-9;
constexpr int kCylinderSamples = 32;

Eigen::Matrix3d yaw_matrix(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

std::optional<double> intersect_box(const BoxShape& box, const ObjectPose& pose,
                                    const Eigen::Vector3d& o,
                                    const Eigen::Vector3d& d) {
  const Eigen::Matrix3d rt = yaw_matrix(pose.yaw).transpose();
  const Eigen::Vector3d lo = rt * (o - pose.position);
  const Eigen::Vector3d ld = rt * d;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double h = box.half_extents[i];
    if (std::abs(ld[i]) < 1e-15) {
      if (lo[i] < -h || lo[i] > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - lo[i]) / ld[i];
    double t1 = (h - lo[i]) / ld[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > kHitEpsilon) return t_near;
  if (t_far > kHitEpsilon) return t_far;
  return std::nullopt;
}

std::optional<double> intersect_cylinder(const CylinderShape& cyl,
                                         const ObjectPose& pose,
                                         const Eigen::Vector3d& o,
                                         const Eigen::Vector3d& d) {
  const double z_lo = pose.position.z() - cyl.height;
  const double z_hi = pose.position.z();
  const double r2 = cyl.radius * cyl.radius;
  const double ox = o.x() - pose.position.x();
  const double oy = o.y() - pose.position.y();
  std::optional<double> best;
  const auto consider = [&best](double t) {
    if (t > kHitEpsilon && (!best || t < *best)) best = t;
  };
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double c = ox * ox + oy * oy - r2;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        const double z = o.z() + t * d.z();
        if (z >= z_lo && z <= z_hi) consider(t);
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double zp : {z_lo, z_hi}) {
      const double t = (zp - o.z()) / d.z();
      const double x = ox + t * d.x();
      const double y = oy + t * d.y();
      if (x * x + y * y <= r2) consider(t);
    }
  }
  return best;
}

std::vector<Eigen::Vector3d> sample_points(const ObjectPose& pose) {
  std::vector<Eigen::Vector3d> pts;
  if (const auto* box = std::get_if<BoxShape>(&pose.shape)) {
    const Eigen::Matrix3d r = yaw_matrix(pose.yaw);
    for (int i = 0; i < 8; ++i) {
      const Eigen::Vector3d s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0,
                              (i & 4) ? 1.0 : -1.0);
      pts.push_back(pose.position + r * s.cwiseProduct(box->half_extents));
    }
  } else {
    const auto& cyl = std::get<CylinderShape>(pose.shape);
    for (int i = 0; i < kCylinderSamples; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / kCylinderSamples;
      const Eigen::Vector3d ring(cyl.radius * std::cos(phi), cyl.radius * std::sin(phi), 0.0);
      pts.push_back(pose.position + ring);
      pts.push_back(pose.position + ring - Eigen::Vector3d(0, 0, cyl.height));
    }
  }
  return pts;
}

}  // namespace

void SceneObject::validate() const {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    if (!(box->half_extents.minCoeff() > 0.0)) {
      throw ConfigError("object " + std::to_string(id) + ": box extents must be > 0");
    }
  } else {
    const auto& c = std::get<CylinderShape>(shape);
    if (!(c.radius > 0.0) || !(c.height > 0.0)) {
      throw ConfigError("object " + std::to_string(id) + ": cylinder size must be > 0");
    }
  }
  if (motion.empty()) {
    throw ConfigError("object " + std::to_string(id) + ": needs at least one waypoint");
  }
  for (std::size_t i = 1; i < motion.size(); ++i) {
    if (motion[i].frame <= motion[i - 1].frame) {
      throw ConfigError("object " + std::to_string(id) +
                        ": waypoint frames must be strictly increasing");
    }
  }
}

void LidarModel::validate() const {
  if (points_per_frame == 0) throw ConfigError("lidar: points_per_frame must be > 0");
  if (!(range_noise_sigma >= 0.0)) throw ConfigError("lidar: range_noise_sigma must be >= 0");
  if (!(max_range > 0.0)) throw ConfigError("lidar: max_range must be > 0");
  const auto fov_ok = [](double f) { return f > 0.0 && f < std::numbers::pi; };
  if (const auto* g = std::get_if<GridPattern>(&pattern)) {
    if (g->rows < 1 || g->cols < 1) throw ConfigError("lidar: grid needs rows, cols >= 1");
    if (!fov_ok(g->fov_h) || !fov_ok(g->fov_v)) throw ConfigError("lidar: fov must be in (0, pi)");
    if (static_cast<std::size_t>(g->rows) * static_cast<std::size_t>(g->cols) != points_per_frame) {
      throw ConfigError("lidar: rows * cols must equal points_per_frame");
    }
  } else {
    const auto& r = std::get<RosettePattern>(pattern);
    if (r.petals < 1 || r.points_per_petal < 1) {
      throw ConfigError("lidar: rosette needs petals, points_per_petal >= 1");
    }
    if (!fov_ok(r.fov)) throw ConfigError("lidar: fov must be in (0, pi)");
    if (static_cast<std::size_t>(r.petals) * static_cast<std::size_t>(r.points_per_petal) !=
        points_per_frame) {
      throw ConfigError("lidar: petals * points_per_petal must equal points_per_frame");
    }
  }
}

std::vector<Eigen::Vector3d> LidarModel::ray_directions(std::size_t frame_index) const {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(points_per_frame);
  if (const auto* g = std::get_if<GridPattern>(&pattern)) {
    const auto step = [](double fov, int n) { return n > 1 ? fov / (n - 1) : 0.0; };
    const double sh = step(g->fov_h, g->cols);
    const double sv = step(g->fov_v, g->rows);
    for (int i = 0; i < g->rows; ++i) {
      const double ay = g->rows > 1 ? -g->fov_v / 2.0 + i * sv : 0.0;
      for (int j = 0; j < g->cols; ++j) {
        const double ax = g->cols > 1 ? -g->fov_h / 2.0 + j * sh : 0.0;
        dirs.push_back(Eigen::Vector3d(std::tan(ax), std::tan(ay), 1.0).normalized());
      }
    }
  } else {
    const auto& r = std::get<RosettePattern>(pattern);
    const double n = static_cast<double>(points_per_frame);
    const double spin = 0.1 * static_cast<double>(frame_index);
    for (std::size_t k = 0; k < points_per_frame; ++k) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / n + spin;
      const double off = r.fov / 2.0 * std::abs(std::cos(r.petals / 2.0 * (phi - spin)));
      dirs.emplace_back(std::sin(off) * std::cos(phi), std::sin(off) * std::sin(phi),
                        std::cos(off));
    }
  }
  return dirs;
}

void Scene::validate() const {
  calibration.intrinsics.validate();
  lidar.validate();
  safety.validate();
  if (frames == 0) throw ConfigError("scene: frames must be > 0");
  if (!(frame_period > 0.0)) throw ConfigError("scene: frame_period must be > 0");
  if (!(detector_noise_px >= 0.0)) throw ConfigError("scene: detector_noise_px must be >= 0");
  for (const auto& o : objects) o.validate();
}

std::vector<ObjectPose> step_motion(const Scene& scene, std::size_t frame_index) {
  if (frame_index >= scene.frames) {
    throw EndOfScenario("frame " + std::to_string(frame_index) + " is past the scene's " +
                        std::to_string(scene.frames) + " frames");
  }
  std::vector<ObjectPose> poses;
  poses.reserve(scene.objects.size());
  for (const SceneObject& obj : scene.objects) {
    const auto& m = obj.motion;
    if (m.empty()) throw ConfigError("object " + std::to_string(obj.id) + " has no waypoints");
    ObjectPose pose{obj.id, obj.object_class, obj.shape, m.front().position, m.front().yaw};
    if (m.size() > 1) {
      if (frame_index > m.back().frame) {
        throw EndOfScenario("frame " + std::to_string(frame_index) + " is past object " +
                            std::to_string(obj.id) + "'s script");
      }
      if (frame_index >= m.front().frame) {
        std::size_t i = 1;
        while (m[i].frame < frame_index) ++i;
        const Waypoint& a = m[i - 1];
        const Waypoint& b = m[i];
        const double s = static_cast<double>(frame_index - a.frame) /
                         static_cast<double>(b.frame - a.frame);
        pose.position = a.position + s * (b.position - a.position);
        pose.yaw = a.yaw + s * (b.yaw - a.yaw);
      }
    }
    poses.push_back(std::move(pose));
  }
  return poses;
}

Eigen::Vector3d truth_position(const ObjectPose& pose) {
  if (const auto* box = std::get_if<BoxShape>(&pose.shape)) {
    return pose.position - Eigen::Vector3d(0, 0, box->half_extents.z());
  }
  return pose.position - Eigen::Vector3d(0, 0, std::get<CylinderShape>(pose.shape).height);
}

std::optional<double> intersect(const ObjectPose& pose, const Eigen::Vector3d& o,
                                const Eigen::Vector3d& d) {
  if (const auto* box = std::get_if<BoxShape>(&pose.shape)) {
    return intersect_box(*box, pose, o, d);
  }
  return intersect_cylinder(std::get<CylinderShape>(pose.shape), pose, o, d);
}

PointCloud raycast_frame(const std::vector<ObjectPose>& poses,
                         std::optional<double> ground_z, const LidarModel& lidar,
                         const ExtrinsicSet& e, std::uint64_t seed,
                         std::size_t frame_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame_index),
                    static_cast<std::uint32_t>(frame_index >> 32), 0x4c695244u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Eigen::Matrix3d& r_wl = e.w_T_l().rotation();
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  PointCloud cloud;
  cloud.points.reserve(lidar.points_per_frame);
  for (const Eigen::Vector3d& dl : lidar.ray_directions(frame_index)) {
    const Eigen::Vector3d dw = r_wl * dl;
    std::optional<double> best;
    for (const ObjectPose& p : poses) {
      if (auto t = intersect(p, origin, dw); t && (!best || *t < *best)) best = t;
    }
    if (ground_z && std::abs(dw.z()) > 1e-15) {
      const double t = (*ground_z - origin.z()) / dw.z();
      if (t > kHitEpsilon && (!best || t < *best)) best = t;
    }
    const double n = noise(rng);
    if (!best || *best > lidar.max_range) {
      cloud.points.emplace_back(Eigen::Vector3d::Zero());
      continue;
    }
    const double range = *best + lidar.range_noise_sigma * n;
    cloud.points.push_back(dl * range);
  }
  return cloud;
}

GroundTruthFrame project_ground_truth(const std::vector<ObjectPose>& poses,
                                      const Calibration& calib,
                                      std::size_t frame_index, double timestamp) {
  const CameraIntrinsics& k = calib.intrinsics;
  GroundTruthFrame gt;
  gt.frame_index = frame_index;
  gt.timestamp = timestamp;
  for (const ObjectPose& pose : poses) {
    ObjectTruth t;
    t.object_id = pose.id;
    t.object_class = pose.object_class;
    t.position = pose.position;
    t.truth_pos = truth_position(pose);
    t.yaw = pose.yaw;
    if (const auto* box = std::get_if<BoxShape>(&pose.shape)) t.extent = box->half_extents;
    Polygon2 projected;
    bool behind = false;
    for (const Eigen::Vector3d& s : sample_points(pose)) {
      try {
        const Reprojection r = reproject_world_to_pixel(k, calib.extrinsics, {s, Frame::World});
        projected.emplace_back(r.pixel.u, r.pixel.v);
      } catch (const BehindCameraError&) {
        behind = true;
        break;
      }
    }
    if (!behind) {
      Polygon2 clipped = clip_to_rect(convex_hull(std::move(projected)), 0.0, 0.0,
                                      k.width - 1.0, k.height - 1.0);
      if (clipped.size() >= 3 && std::abs(signed_area(clipped)) > 1e-9) {
        t.visible = true;
        t.bbox = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
        for (const auto& p : clipped) {
          t.bbox.u_min = std::min(t.bbox.u_min, p.x());
          t.bbox.v_min = std::min(t.bbox.v_min, p.y());
          t.bbox.u_max = std::max(t.bbox.u_max, p.x());
          t.bbox.v_max = std::max(t.bbox.v_max, p.y());
        }
        t.silhouette = std::move(clipped);
        if (!t.bbox.valid()) {
          t.visible = false;
          t.silhouette.clear();
          t.bbox = {};
        }
      }
    }
    gt.objects.push_back(std::move(t));
  }
  return gt;
}

SimulatedFrame simulate_frame(const Scene& scene, std::size_t frame_index) {
  const auto poses = step_motion(scene, frame_index);
  SimulatedFrame f;
  f.frame_index = frame_index;
  f.timestamp = static_cast<double>(frame_index) * scene.frame_period;
  f.cloud = raycast_frame(poses, scene.ground_z, scene.lidar, scene.calibration.extrinsics,
                          scene.seed, frame_index);
  f.cloud.timestamp = f.timestamp;
  f.cloud.source_id = "sim";
  f.truth = project_ground_truth(poses, scene.calibration, frame_index, f.timestamp);
  return f;
}

void write_render_ppm(const GroundTruthFrame& truth, const CameraIntrinsics& k,
                      const std::filesystem::path& path, int downscale) {
  if (downscale < 1) throw UsageError("write_render_ppm: downscale must be >= 1");
  const int w = std::max(1, k.width / downscale);
  const int h = std::max(1, k.height / downscale);
  std::vector<unsigned char> img(static_cast<std::size_t>(w) * h * 3, 96);
  std::vector<const ObjectTruth*> order;
  for (const auto& o : truth.objects) {
    if (o.visible) order.push_back(&o);
  }
  std::stable_sort(order.begin(), order.end(), [](const ObjectTruth* a, const ObjectTruth* b) {
    return a->truth_pos.z() > b->truth_pos.z();
  });
  for (const ObjectTruth* o : order) {
    unsigned char rgb[3];
    switch (o->object_class) {
      case ObjectClass::Human: rgb[0] = 255; rgb[1] = 214; rgb[2] = 0; break;
      case ObjectClass::MiC: rgb[0] = 41; rgb[1] = 98; rgb[2] = 255; break;
      case ObjectClass::MiCFrame: rgb[0] = 255; rgb[1] = 109; rgb[2] = 0; break;
    }
    Polygon2 scaled;
    for (const auto& p : o->silhouette) scaled.push_back(p / downscale);
    for (int y = 0; y < h; ++y) {
      const auto span = convex_row_span(scaled, y + 0.5);
      if (!span) continue;
      const int x0 = std::max(0, static_cast<int>(std::ceil(span->first - 0.5)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(span->second - 0.5)));
      for (int x = x0; x <= x1; ++x) {
        std::copy(rgb, rgb + 3, &img[(static_cast<std::size_t>(y) * w + x) * 3]);
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

Calibration default_sim_calibration() {
  Calibration c;
  c.intrinsics = CameraIntrinsics::from_pinhole(3000.0, 3000.0, 2736.0, 1824.0, 5472, 3648);
  c.extrinsics = ExtrinsicSet::identity();
  return c;
}

}  // namespace liftwatch
