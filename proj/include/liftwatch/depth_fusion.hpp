#pragma once

#include <Eigen/Core>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "liftwatch/clustering.hpp"
#include "liftwatch/geometry.hpp"
#include "liftwatch/perception.hpp"
#include "liftwatch/pointcloud.hpp"

namespace liftwatch {

/// 0.2 degrees.
inline constexpr double kDefaultThetaMax = 0.2 * std::numbers::pi / 180.0;

struct FusionConfig {
  double theta_max = kDefaultThetaMax;  // per-pixel gate on the angle distance
  std::size_t max_pixels = 4096;        // pixels sampled per object, stride-decimated
  ClusterMethod method = ClusterMethod::kmeans(2);

  void validate() const;
};

/// LiDAR-frame z of the points matched to an object's pixels.
struct DepthCandidateSet {
  std::vector<double> values;
  PixelPoint anchor_pixel;
  ObjectClass object_class = ObjectClass::MiC;
};

struct Localization3D {
  ObjectClass object_class = ObjectClass::MiC;
  Point3 position;                        // world frame
  std::optional<Eigen::Vector3d> extent;  // world-aligned half sizes
  double yaw = 0.0;                       // about world z, radians
  TrackId source_track = -1;
  double z_c = 0.0;                       // solved camera depth at the anchor
  double z_l_prime = 0.0;                 // selected LiDAR-frame depth
  double confidence = 1.0;
  BBox bbox;
  PixelPoint anchor_pixel;
  std::size_t candidate_count = 0;
  bool predicted = false;
};

struct FusionFailure {
  TrackId track = -1;
  ObjectClass object_class = ObjectClass::MiC;
  double confidence = 1.0;
  BBox bbox;
  std::string reason;
};

using LocalizeResult = std::variant<Localization3D, FusionFailure>;

/// Camera depth z_c from the LiDAR-frame depth z_l' of the matched point:
///   z_c = (z_l' - t_z) / (r31 (f_x u + c_x) + r32 (f_y v + c_y) + r33).
/// Throws GeometryError when the denominator is within 1e-9 of zero.
double solve_z_c(const CameraIntrinsics& k, const RigidTransform& l_T_c,
                 const PixelPoint& p, double z_l_prime);

/// World point on the pixel's line of sight at camera depth z_c.
Point3 lift_pixel(const CameraIntrinsics& k, const ExtrinsicSet& e,
                  const PixelPoint& p, double z_c);

/// Search structure over one preprocessed sweep, rooted at the camera centre.
AngularIndex make_fusion_index(const PointCloud& preprocessed,
                               const ExtrinsicSet& e, double theta_max);

/// For each pixel, the angle-nearest point within theta_max contributes its
/// z_l. Pixels without such a point contribute nothing.
DepthCandidateSet collect_depth_candidates(std::span<const PixelPoint> pixels,
                                           const AngularIndex& index,
                                           const CameraIntrinsics& k,
                                           const ExtrinsicSet& e,
                                           double theta_max);
DepthCandidateSet collect_depth_candidates(std::span<const PixelPoint> pixels,
                                           const PointCloud& preprocessed,
                                           const CameraIntrinsics& k,
                                           const ExtrinsicSet& e,
                                           double theta_max);

/// Pixels used for fusion: the mask (or the box, for humans and maskless
/// objects) clipped to the image and decimated to at most cfg.max_pixels.
std::vector<PixelPoint> fusion_pixels(const Detection2D& det, const Mask2D* mask,
                                      const CameraIntrinsics& k,
                                      std::size_t max_pixels);

/// Anchor: box centre for humans, mask centroid for MiC and MiC frames.
PixelPoint anchor_pixel(const Detection2D& det, const Mask2D* mask,
                        const CameraIntrinsics& k);

/// Full 2D-to-3D lift of one detection. An empty candidate set, a grazing ray
/// or a non-positive solved depth yields a FusionFailure.
LocalizeResult localize_object(const Detection2D& det, const Mask2D* mask,
                               const AngularIndex& index,
                               const CameraIntrinsics& k, const ExtrinsicSet& e,
                               const FusionConfig& cfg);

}  // namespace liftwatch
