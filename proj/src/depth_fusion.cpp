#include "liftwatch/depth_fusion.hpp"

#include <algorithm>
#include <cmath>

#include "liftwatch/errors.hpp"

namespace liftwatch {

void FusionConfig::validate() const {
  if (!(theta_max > 0.0)) throw ConfigError("fusion: theta_max must be > 0");
  if (max_pixels == 0) throw ConfigError("fusion: max_pixels must be > 0");
  method.validate();
}

double solve_z_c(const CameraIntrinsics& k, const RigidTransform& l_T_c,
                 const PixelPoint& p, double z_l_prime) {
  const ScaledPoint s = pixel_to_scaled(k, p);
  const Eigen::Matrix3d& r = l_T_c.rotation();
  const double denom = r(2, 0) * s.a + r(2, 1) * s.b + r(2, 2);
  if (std::abs(denom) <= 1e-9) {
    throw GeometryError("solve_z_c: pixel ray is parallel to the LiDAR x-y plane");
  }
  return (z_l_prime - l_T_c.translation().z()) / denom;
}

Point3 lift_pixel(const CameraIntrinsics& k, const ExtrinsicSet& e,
                  const PixelPoint& p, double z_c) {
  const ScaledPoint s = pixel_to_scaled(k, p);
  return camera_to_world(e, {Eigen::Vector3d(s.a * z_c, s.b * z_c, z_c), Frame::Camera});
}

AngularIndex make_fusion_index(const PointCloud& preprocessed, const ExtrinsicSet& e,
                               double theta_max) {
  return AngularIndex(preprocessed, e.camera_origin_in_lidar(), 2.0 * std::sin(theta_max / 2.0));
}

DepthCandidateSet collect_depth_candidates(std::span<const PixelPoint> pixels,
                                           const AngularIndex& index,
                                           const CameraIntrinsics& k,
                                           const ExtrinsicSet& e,
                                           double theta_max) {
  DepthCandidateSet out;
  out.values.reserve(pixels.size());
  for (const PixelPoint& p : pixels) {
    const Eigen::Vector3d dir = scaled_to_lidar_ray(e, pixel_to_scaled(k, p));
    if (auto m = index.nearest_within(dir, theta_max)) out.values.push_back(m->point.z());
  }
  return out;
}

DepthCandidateSet collect_depth_candidates(std::span<const PixelPoint> pixels,
                                           const PointCloud& preprocessed,
                                           const CameraIntrinsics& k,
                                           const ExtrinsicSet& e,
                                           double theta_max) {
  return collect_depth_candidates(pixels, make_fusion_index(preprocessed, e, theta_max),
                                  k, e, theta_max);
}

namespace {

Mask2D clip_to_image(const Mask2D& m, const CameraIntrinsics& k) {
  const int u0 = std::max(m.u0(), 0);
  const int v0 = std::max(m.v0(), 0);
  const int u1 = std::min(m.u0() + m.width(), k.width);
  const int v1 = std::min(m.v0() + m.height(), k.height);
  Mask2D out(u0, v0, std::max(0, u1 - u0), std::max(0, v1 - v0));
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) {
      if (m.at(u, v)) out.set(u, v);
    }
  }
  return out;
}

Mask2D region_for(const Detection2D& det, const Mask2D* mask, const CameraIntrinsics& k) {
  if (det.object_class != ObjectClass::Human && mask != nullptr) return clip_to_image(*mask, k);
  return clip_to_image(Mask2D::filled(det.bbox), k);
}

}  // namespace

std::vector<PixelPoint> fusion_pixels(const Detection2D& det, const Mask2D* mask,
                                      const CameraIntrinsics& k,
                                      std::size_t max_pixels) {
  const Mask2D region = region_for(det, mask, k);
  const std::size_t n = region.count();
  int stride = 1;
  if (n > max_pixels) {
    stride = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n) /
                                                  static_cast<double>(max_pixels))));
  }
  auto px = region.pixels(stride);
  while (px.size() > max_pixels) px = region.pixels(++stride);
  return px;
}

PixelPoint anchor_pixel(const Detection2D& det, const Mask2D* mask,
                        const CameraIntrinsics& k) {
  if (det.object_class == ObjectClass::Human || mask == nullptr) {
    PixelPoint c = det.bbox.center();
    c.u = std::clamp(c.u, 0.0, static_cast<double>(k.width - 1));
    c.v = std::clamp(c.v, 0.0, static_cast<double>(k.height - 1));
    return c;
  }
  return clip_to_image(*mask, k).centroid();
}

LocalizeResult localize_object(const Detection2D& det, const Mask2D* mask,
                               const AngularIndex& index,
                               const CameraIntrinsics& k, const ExtrinsicSet& e,
                               const FusionConfig& cfg) {
  FusionFailure fail{det.track_id.value_or(-1), det.object_class, det.confidence,
                     det.bbox, ""};
  const std::vector<PixelPoint> pixels = fusion_pixels(det, mask, k, cfg.max_pixels);
  if (pixels.empty()) {
    fail.reason = "no in-image pixels";
    return fail;
  }
  DepthCandidateSet cand = collect_depth_candidates(pixels, index, k, e, cfg.theta_max);
  cand.object_class = det.object_class;
  cand.anchor_pixel = anchor_pixel(det, mask, k);
  if (cand.values.empty()) {
    fail.reason = "no LiDAR returns under the object";
    return fail;
  }
  ClusterMethod method = cfg.method;
  if (method.kind == ClusterMethod::Kind::KMeans &&
      static_cast<std::size_t>(method.k) > cand.values.size()) {
    method.k = static_cast<int>(cand.values.size());
  }
  const auto clusters = cluster_1d(cand.values, method);
  const double z_l = select_object_depth(clusters);
  double z_c = 0.0;
  try {
    z_c = solve_z_c(k, e.l_T_c(), cand.anchor_pixel, z_l);
  } catch (const GeometryError& ex) {
    fail.reason = ex.what();
    return fail;
  }
  if (!(z_c > 0.0)) {
    fail.reason = "solved depth is not in front of the camera";
    return fail;
  }
  Localization3D loc;
  loc.object_class = det.object_class;
  loc.position = lift_pixel(k, e, cand.anchor_pixel, z_c);
  loc.source_track = det.track_id.value_or(-1);
  loc.z_c = z_c;
  loc.z_l_prime = z_l;
  loc.confidence = det.confidence;
  loc.bbox = det.bbox;
  loc.anchor_pixel = cand.anchor_pixel;
  loc.candidate_count = cand.values.size();
  loc.predicted = det.predicted;
  return loc;
}

}  // namespace liftwatch
