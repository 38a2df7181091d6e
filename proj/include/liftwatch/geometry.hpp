#pragma once

#include <Eigen/Core>
#include <string_view>

namespace liftwatch {

/// Coordinate frames of the rig. Pixel coordinates live in PixelPoint and
/// carry no tag.
enum class Frame { World, Lidar, Camera };

std::string_view to_string(Frame f);

/// Maps pixels to the camera's scaled plane:
///   x_c / z_c = f_x * u + c_x,   y_c / z_c = f_y * v + c_y.
/// This is the inverse of the usual pinhole matrix. A conventional calibration
/// (focal length and principal point in pixels) converts with from_pinhole().
struct CameraIntrinsics {
  double f_x = 0.0;  // 1/pixels
  double f_y = 0.0;
  double c_x = 0.0;
  double c_y = 0.0;
  int width = 0;
  int height = 0;

  static CameraIntrinsics from_pinhole(double focal_x_px, double focal_y_px,
                                       double principal_x_px,
                                       double principal_y_px, int width,
                                       int height);

  /// Throws DomainError unless f_x, f_y are non-zero and the image is non-empty.
  void validate() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct Point3 {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Frame frame = Frame::World;
};

/// (a, b) = (x/z, y/z); the implied direction is (a, b, 1) in `frame`.
struct ScaledPoint {
  double a = 0.0;
  double b = 0.0;
  Frame frame = Frame::Camera;
};

/// Active, column-vector rigid motion taking points from `source` to `target`:
/// p_target = R * p_source + t.
class RigidTransform {
 public:
  RigidTransform(const Eigen::Matrix3d& rotation,
                 const Eigen::Vector3d& translation, Frame source,
                 Frame target);

  static RigidTransform identity(Frame source, Frame target);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Frame source() const { return source_; }
  Frame target() const { return target_; }

  RigidTransform inverse() const;

  /// Raw R * p + t with no frame bookkeeping.
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  Frame source_;
  Frame target_;
};

/// `outer * inner`: applies `inner` first. inner.target must equal outer.source.
RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);

/// Camera-to-LiDAR and LiDAR-to-world maps. The world frame shares the LiDAR
/// origin, so w_T_l is a pure rotation.
class ExtrinsicSet {
 public:
  ExtrinsicSet(RigidTransform l_T_c, RigidTransform w_T_l);

  static ExtrinsicSet identity();

  const RigidTransform& l_T_c() const { return l_T_c_; }
  const RigidTransform& w_T_l() const { return w_T_l_; }

  /// Camera centre expressed in the LiDAR frame.
  const Eigen::Vector3d& camera_origin_in_lidar() const {
    return l_T_c_.translation();
  }

 private:
  RigidTransform l_T_c_;
  RigidTransform w_T_l_;
};

/// A half-line in the LiDAR frame. `direction` is unit length.
struct LidarRay {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

bool in_bounds(const CameraIntrinsics& k, const PixelPoint& p);

/// Throws DomainError for pixels outside [0,width) x [0,height).
ScaledPoint pixel_to_scaled(const CameraIntrinsics& k, const PixelPoint& p);

/// Analytic inverse of pixel_to_scaled (no bounds check).
PixelPoint scaled_to_pixel(const CameraIntrinsics& k, const ScaledPoint& s);

/// Unit direction of R * (a, b, 1) in the LiDAR frame. Throws GeometryError
/// when the direction degenerates.
Eigen::Vector3d scaled_to_lidar_ray(const ExtrinsicSet& e, const ScaledPoint& s);

/// The line of sight of a pixel expressed in the LiDAR frame: it starts at the
/// camera centre and runs along scaled_to_lidar_ray(). With a zero
/// camera-LiDAR translation the origin is the LiDAR origin.
LidarRay pixel_ray(const CameraIntrinsics& k, const ExtrinsicSet& e,
                   const PixelPoint& p);

/// Applies `t` to `p`. Throws UsageError if p.frame != t.source().
Point3 transform_point(const RigidTransform& t, const Point3& p);

/// Camera-frame point (x_c, y_c, z_c) lifted through l_T_c then w_T_l.
Point3 camera_to_world(const ExtrinsicSet& e, const Point3& p_c);

struct Reprojection {
  PixelPoint pixel;
  double z_c = 0.0;
  bool in_frame = false;  // pixel inside the image bounds
};

/// World point back to the image. Throws BehindCameraError when z_c <= 0.
/// Pixels outside the image are returned with in_frame = false.
Reprojection reproject_world_to_pixel(const CameraIntrinsics& k,
                                      const ExtrinsicSet& e, const Point3& p_w);

/// Same as reproject_world_to_pixel for a LiDAR-frame point.
Reprojection reproject_lidar_to_pixel(const CameraIntrinsics& k,
                                      const ExtrinsicSet& e, const Point3& p_l);

/// Orthonormality residual max|R^T R - I| and determinant check.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

}  // namespace liftwatch
