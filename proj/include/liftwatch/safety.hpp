#pragma once

#include <Eigen/Core>
#include <json.hpp>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "liftwatch/depth_fusion.hpp"
#include "liftwatch/perception.hpp"
#include "liftwatch/polygon.hpp"

namespace liftwatch {

struct SafetyConfig {
  double d_safe = 2.0;       // horizontal margin around a MiC footprint, m
  double d_collision = 5.0;  // minimum allowed gap between MiC frames, m
  double z_top = 40.0;       // construction-top plane, world z
  double conf_human = 0.5;
  double conf_large = 0.7;   // MiC and MiC frame
  std::map<ObjectClass, Eigen::Vector3d> extent_catalog;  // half extents

  static SafetyConfig defaults();
  void validate() const;
};

/// `require_distances` makes d_safe and d_collision mandatory keys.
SafetyConfig safety_from_json(const nlohmann::json& j, bool require_distances = false);
nlohmann::json to_json(const SafetyConfig& c);

struct DangerZone {
  Polygon2 footprint;  // world x-y, counter-clockwise
  double z = 0.0;      // plane the footprint lies on
  TrackId source_object = -1;
  double inflated_by = 0.0;
};

struct HumanInDanger {
  TrackId track = -1;
  Point3 position;
};

struct Collision {
  TrackId a = -1;  // a < b
  TrackId b = -1;
  double distance = 0.0;
};

enum class SafetyStatus { Safe, Danger };

struct SafetyVerdict {
  std::size_t frame_index = 0;
  SafetyStatus status = SafetyStatus::Safe;
  std::vector<HumanInDanger> humans_in_danger;
  std::vector<Collision> collisions;
  std::vector<DangerZone> zones;
  std::vector<TrackId> fusion_failures;
};

/// Half extents for an object: its own, else the catalog entry, else none.
std::optional<Eigen::Vector3d> resolve_extent(const Localization3D& loc,
                                              const SafetyConfig& cfg);

/// Axis-aligned footprint of the (yawed) MiC, grown by d_safe on every side,
/// on the z_top plane. Throws ConfigError when no extent is known.
DangerZone build_danger_zone(const Localization3D& mic, const SafetyConfig& cfg);

/// Closed-region test of the human's world (x, y) against the footprint.
bool human_in_danger(const DangerZone& zone, const Localization3D& human);

/// Euclidean gap between the two frames' extent boxes (0 when they overlap);
/// reported when the gap is below d_collision.
std::optional<Collision> frames_collision(const Localization3D& a,
                                          const Localization3D& b,
                                          const SafetyConfig& cfg);

/// Applies the class confidence thresholds, builds zones for every MiC,
/// tests every human against every zone and every frame pair for collision.
SafetyVerdict assess_frame(std::size_t frame_index,
                           std::span<const Localization3D> localizations,
                           std::span<const FusionFailure> failures,
                           const SafetyConfig& cfg);

bool passes_threshold(ObjectClass c, double confidence, const SafetyConfig& cfg);

nlohmann::json to_json(const SafetyVerdict& v);

}  // namespace liftwatch
