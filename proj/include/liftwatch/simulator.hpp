#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "liftwatch/calibration.hpp"
#include "liftwatch/detections_io.hpp"
#include "liftwatch/perception.hpp"
#include "liftwatch/pointcloud.hpp"
#include "liftwatch/polygon.hpp"
#include "liftwatch/safety.hpp"

namespace liftwatch {

// World z points away from the sensor (down), so "up" is -z.

/// Yawed box; `position` is its centre.
struct BoxShape {
  Eigen::Vector3d half_extents{1.0, 1.0, 1.0};
};

/// Vertical cylinder; `position` is the centre of its lower cap and the body
/// extends `height` towards -z.
struct CylinderShape {
  double radius = 0.3;
  double height = 1.7;
};

using Shape = std::variant<BoxShape, CylinderShape>;

struct Waypoint {
  std::size_t frame = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

struct SceneObject {
  std::int64_t id = 0;
  ObjectClass object_class = ObjectClass::MiC;
  Shape shape = BoxShape{};
  std::vector<Waypoint> motion;  // strictly increasing frame

  void validate() const;
};

struct GridPattern {
  int rows = 120;
  int cols = 200;
  double fov_h = 0.7;
  double fov_v = 0.42;
};

/// Rose curve r = fov/2 * |cos(petals * phi)| sampled with points_per_petal
/// points per petal; rotated a little every frame.
struct RosettePattern {
  int petals = 6;
  int points_per_petal = 4000;
  double fov = 0.7;
};

struct LidarModel {
  std::variant<GridPattern, RosettePattern> pattern = GridPattern{};
  std::size_t points_per_frame = 24000;
  double range_noise_sigma = 0.0;
  double max_range = 200.0;

  void validate() const;
  /// Unit directions in L for one sweep; `points_per_frame` of them.
  std::vector<Eigen::Vector3d> ray_directions(std::size_t frame_index = 0) const;
};

struct Scene {
  std::uint64_t seed = 0;
  Calibration calibration;
  LidarModel lidar;
  std::vector<SceneObject> objects;
  std::size_t frames = 1;
  double frame_period = 0.1;         // seconds
  std::optional<double> ground_z;    // construction-top surface, world z
  SafetyConfig safety = SafetyConfig::defaults();
  double detector_noise_px = 0.0;

  void validate() const;
};

struct ObjectPose {
  std::int64_t id = 0;
  ObjectClass object_class = ObjectClass::MiC;
  Shape shape;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Object poses at `frame_index`, linearly interpolated between bracketing
/// waypoints. Throws EndOfScenario past the scene's frame count or past the
/// last waypoint of any multi-waypoint script.
std::vector<ObjectPose> step_motion(const Scene& scene, std::size_t frame_index);

/// Centre of the sensor-facing surface: box top face or cylinder upper cap.
Eigen::Vector3d truth_position(const ObjectPose& pose);

/// Ray parameter of the first hit of a ray (origin o, unit direction d in W)
/// with a shape, if any.
std::optional<double> intersect(const ObjectPose& pose, const Eigen::Vector3d& o,
                                const Eigen::Vector3d& d);

/// Ray-cast one sweep. Rays start at the LiDAR origin; misses and hits beyond
/// max_range give exact zeros. Noise is drawn from (seed, frame_index).
PointCloud raycast_frame(const std::vector<ObjectPose>& poses,
                         std::optional<double> ground_z, const LidarModel& lidar,
                         const ExtrinsicSet& e, std::uint64_t seed,
                         std::size_t frame_index);

struct ObjectTruth {
  std::int64_t object_id = 0;
  ObjectClass object_class = ObjectClass::MiC;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();   // pose position
  Eigen::Vector3d truth_pos = Eigen::Vector3d::Zero();  // localization target
  std::optional<Eigen::Vector3d> extent;                // boxes only
  double yaw = 0.0;
  bool visible = false;
  Polygon2 silhouette;  // image pixels, clipped; empty when not visible
  BBox bbox;            // bounds of the silhouette
};

struct GroundTruthFrame {
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  std::vector<ObjectTruth> objects;
};

/// Silhouettes from sample points of each shape. Objects with any sample
/// behind the camera are invisible.
GroundTruthFrame project_ground_truth(const std::vector<ObjectPose>& poses,
                                      const Calibration& calib,
                                      std::size_t frame_index,
                                      double timestamp = 0.0);

/// Everything needed downstream for one simulated frame.
struct SimulatedFrame {
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  PointCloud cloud;
  GroundTruthFrame truth;
};

SimulatedFrame simulate_frame(const Scene& scene, std::size_t frame_index);

/// Flat-shaded render of the visible silhouettes, far objects first, at
/// 1/downscale resolution.
void write_render_ppm(const GroundTruthFrame& truth, const CameraIntrinsics& k,
                      const std::filesystem::path& path, int downscale = 8);

Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scene& s);
Scene load_scene(const std::filesystem::path& path);

/// Ground-truth JSONL record: detections schema plus object_id, truth_pos and
/// silhouette. Invisible objects are not written.
nlohmann::json to_json(const ObjectTruth& t, std::size_t frame);
ObjectTruth truth_from_json(const nlohmann::json& j, std::size_t line = 0);
/// Truth records per frame.
std::map<std::size_t, std::vector<ObjectTruth>> load_ground_truth(
    const std::filesystem::path& path);

/// Default camera used by generated scenes: 5472 x 3648, 3000 px focal length,
/// principal point at the image centre, looking along L's z axis.
Calibration default_sim_calibration();

}  // namespace liftwatch
