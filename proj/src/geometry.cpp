#include "liftwatch/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "liftwatch/errors.hpp"

namespace liftwatch {

std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::World:
      return "W";
    case Frame::Lidar:
      return "L";
    case Frame::Camera:
      return "C";
  }
  return "?";
}

CameraIntrinsics CameraIntrinsics::from_pinhole(double focal_x_px,
                                                double focal_y_px,
                                                double principal_x_px,
                                                double principal_y_px,
                                                int width, int height) {
  if (focal_x_px == 0.0 || focal_y_px == 0.0) {
    throw DomainError("pinhole focal length must be non-zero");
  }
  CameraIntrinsics k;
  k.f_x = 1.0 / focal_x_px;
  k.f_y = 1.0 / focal_y_px;
  k.c_x = -principal_x_px / focal_x_px;
  k.c_y = -principal_y_px / focal_y_px;
  k.width = width;
  k.height = height;
  k.validate();
  return k;
}

void CameraIntrinsics::validate() const {
  if (f_x == 0.0 || f_y == 0.0 || !std::isfinite(f_x) || !std::isfinite(f_y)) {
    throw DomainError("intrinsics: f_x and f_y must be finite and non-zero");
  }
  if (!std::isfinite(c_x) || !std::isfinite(c_y)) {
    throw DomainError("intrinsics: c_x and c_y must be finite");
  }
  if (width <= 0 || height <= 0) {
    throw DomainError("intrinsics: image dimensions must be positive");
  }
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation,
                               const Eigen::Vector3d& translation,
                               Frame source, Frame target)
    : rotation_(rotation),
      translation_(translation),
      source_(source),
      target_(target) {
  if (!is_rotation(rotation_)) {
    throw DomainError("rigid transform: rotation is not orthonormal with det +1");
  }
  if (!translation_.allFinite()) {
    throw DomainError("rigid transform: translation is not finite");
  }
}

RigidTransform RigidTransform::identity(Frame source, Frame target) {
  return RigidTransform(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(),
                        source, target);
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return RigidTransform(rt, -(rt * translation_), target_, source_);
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
  if (inner.target() != outer.source()) {
    std::ostringstream msg;
    msg << "compose: inner maps to " << to_string(inner.target())
        << " but outer starts at " << to_string(outer.source());
    throw UsageError(msg.str());
  }
  return RigidTransform(outer.rotation() * inner.rotation(),
                        outer.rotation() * inner.translation() +
                            outer.translation(),
                        inner.source(), outer.target());
}

ExtrinsicSet::ExtrinsicSet(RigidTransform l_T_c, RigidTransform w_T_l)
    : l_T_c_(std::move(l_T_c)), w_T_l_(std::move(w_T_l)) {
  if (l_T_c_.source() != Frame::Camera || l_T_c_.target() != Frame::Lidar) {
    throw UsageError("extrinsics: l_T_c must map C to L");
  }
  if (w_T_l_.source() != Frame::Lidar || w_T_l_.target() != Frame::World) {
    throw UsageError("extrinsics: w_T_l must map L to W");
  }
  if (w_T_l_.translation() != Eigen::Vector3d::Zero()) {
    throw DomainError("extrinsics: w_T_l must have zero translation (W and L share an origin)");
  }
}

ExtrinsicSet ExtrinsicSet::identity() {
  return ExtrinsicSet(RigidTransform::identity(Frame::Camera, Frame::Lidar),
                      RigidTransform::identity(Frame::Lidar, Frame::World));
}

bool in_bounds(const CameraIntrinsics& k, const PixelPoint& p) {
  return p.u >= 0.0 && p.v >= 0.0 && p.u < static_cast<double>(k.width) &&
         p.v < static_cast<double>(k.height);
}

ScaledPoint pixel_to_scaled(const CameraIntrinsics& k, const PixelPoint& p) {
  if (!in_bounds(k, p)) {
    std::ostringstream msg;
    msg << "pixel (" << p.u << ", " << p.v << ") outside " << k.width << "x"
        << k.height << " image";
    throw DomainError(msg.str());
  }
  return {k.f_x * p.u + k.c_x, k.f_y * p.v + k.c_y, Frame::Camera};
}

PixelPoint scaled_to_pixel(const CameraIntrinsics& k, const ScaledPoint& s) {
  return {(s.a - k.c_x) / k.f_x, (s.b - k.c_y) / k.f_y};
}

Eigen::Vector3d scaled_to_lidar_ray(const ExtrinsicSet& e, const ScaledPoint& s) {
  if (s.frame != Frame::Camera) {
    throw UsageError("scaled_to_lidar_ray expects a camera-frame scaled point");
  }
  const Eigen::Vector3d dir = e.l_T_c().rotation() * Eigen::Vector3d(s.a, s.b, 1.0);
  const double n = dir.norm();
  if (!(n >= 1e-12) || !std::isfinite(n)) {
    throw GeometryError("scaled_to_lidar_ray: degenerate direction");
  }
  return dir / n;
}

LidarRay pixel_ray(const CameraIntrinsics& k, const ExtrinsicSet& e,
                   const PixelPoint& p) {
  return {e.camera_origin_in_lidar(), scaled_to_lidar_ray(e, pixel_to_scaled(k, p))};
}

Point3 transform_point(const RigidTransform& t, const Point3& p) {
  if (p.frame != t.source()) {
    std::ostringstream msg;
    msg << "transform_point: point tagged " << to_string(p.frame)
        << " but transform starts at " << to_string(t.source());
    throw UsageError(msg.str());
  }
  return {t.apply(p.xyz), t.target()};
}

Point3 camera_to_world(const ExtrinsicSet& e, const Point3& p_c) {
  return transform_point(e.w_T_l(), transform_point(e.l_T_c(), p_c));
}

namespace {

Reprojection camera_point_to_pixel(const CameraIntrinsics& k,
                                   const Eigen::Vector3d& c) {
  if (!(c.z() > 0.0)) {
    throw BehindCameraError("reprojection: point at or behind the camera plane");
  }
  Reprojection r;
  r.z_c = c.z();
  r.pixel = scaled_to_pixel(k, {c.x() / c.z(), c.y() / c.z(), Frame::Camera});
  r.in_frame = in_bounds(k, r.pixel);
  return r;
}

}  // namespace

Reprojection reproject_lidar_to_pixel(const CameraIntrinsics& k,
                                      const ExtrinsicSet& e, const Point3& p_l) {
  const Point3 c = transform_point(e.l_T_c().inverse(), p_l);
  return camera_point_to_pixel(k, c.xyz);
}

Reprojection reproject_world_to_pixel(const CameraIntrinsics& k,
                                      const ExtrinsicSet& e, const Point3& p_w) {
  const Point3 l = transform_point(e.w_T_l().inverse(), p_w);
  return reproject_lidar_to_pixel(k, e, l);
}

}  // namespace liftwatch
