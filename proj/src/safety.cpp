#include "liftwatch/safety.hpp"

#include <algorithm>
#include <cmath>

#include "liftwatch/errors.hpp"

namespace liftwatch {

using nlohmann::json;

SafetyConfig SafetyConfig::defaults() {
  SafetyConfig c;
  c.extent_catalog[ObjectClass::MiC] = Eigen::Vector3d(6.0, 2.5, 1.5);
  c.extent_catalog[ObjectClass::MiCFrame] = Eigen::Vector3d(6.5, 3.0, 0.4);
  return c;
}

void SafetyConfig::validate() const {
  if (!(d_safe >= 0.0) || !(d_collision >= 0.0)) {
    throw ConfigError("safety: distances must be >= 0");
  }
  if (!std::isfinite(z_top)) throw ConfigError("safety: z_top must be finite");
  for (double t : {conf_human, conf_large}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("safety: thresholds must be in [0,1]");
  }
  for (const auto& [cls, e] : extent_catalog) {
    if (!(e.minCoeff() >= 0.0)) throw ConfigError("safety: catalog extents must be >= 0");
  }
}

SafetyConfig safety_from_json(const json& j, bool require_distances) {
  SafetyConfig c = SafetyConfig::defaults();
  try {
    if (require_distances && (!j.contains("d_safe") || !j.contains("d_collision"))) {
      throw ConfigError("safety: d_safe and d_collision must be set explicitly");
    }
    c.d_safe = j.value("d_safe", c.d_safe);
    c.d_collision = j.value("d_collision", c.d_collision);
    c.z_top = j.value("z_top", c.z_top);
    c.conf_human = j.value("conf_human", c.conf_human);
    c.conf_large = j.value("conf_large", c.conf_large);
    if (j.contains("extent_catalog")) {
      c.extent_catalog.clear();
      for (const auto& [name, v] : j.at("extent_catalog").items()) {
        if (!v.is_array() || v.size() != 3) {
          throw ConfigError("safety: catalog entry '" + name + "' must be [hx, hy, hz]");
        }
        c.extent_catalog[class_from_string(name)] =
            Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("safety: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("safety: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const SafetyConfig& c) {
  json cat = json::object();
  for (const auto& [cls, e] : c.extent_catalog) {
    cat[std::string(to_string(cls))] = {e.x(), e.y(), e.z()};
  }
  return json{{"d_safe", c.d_safe},         {"d_collision", c.d_collision},
              {"z_top", c.z_top},           {"conf_human", c.conf_human},
              {"conf_large", c.conf_large}, {"extent_catalog", cat}};
}

std::optional<Eigen::Vector3d> resolve_extent(const Localization3D& loc,
                                              const SafetyConfig& cfg) {
  if (loc.extent) return loc.extent;
  const auto it = cfg.extent_catalog.find(loc.object_class);
  if (it != cfg.extent_catalog.end()) return it->second;
  return std::nullopt;
}

DangerZone build_danger_zone(const Localization3D& mic, const SafetyConfig& cfg) {
  if (mic.object_class != ObjectClass::MiC) {
    throw UsageError("build_danger_zone expects a MiC localization");
  }
  const auto extent = resolve_extent(mic, cfg);
  if (!extent) throw ConfigError("build_danger_zone: no extent for MiC and empty catalog");
  const double c = std::abs(std::cos(mic.yaw));
  const double s = std::abs(std::sin(mic.yaw));
  const double hx = c * extent->x() + s * extent->y() + cfg.d_safe;
  const double hy = s * extent->x() + c * extent->y() + cfg.d_safe;
  const double x = mic.position.xyz.x();
  const double y = mic.position.xyz.y();
  DangerZone z;
  z.footprint = {{x - hx, y - hy}, {x + hx, y - hy}, {x + hx, y + hy}, {x - hx, y + hy}};
  z.z = cfg.z_top;
  z.source_object = mic.source_track;
  z.inflated_by = cfg.d_safe;
  return z;
}

bool human_in_danger(const DangerZone& zone, const Localization3D& human) {
  if (human.object_class != ObjectClass::Human) {
    throw UsageError("human_in_danger expects a human localization");
  }
  return point_in_convex_polygon(zone.footprint, human.position.xyz.head<2>());
}

std::optional<Collision> frames_collision(const Localization3D& a,
                                          const Localization3D& b,
                                          const SafetyConfig& cfg) {
  if (a.object_class != ObjectClass::MiCFrame || b.object_class != ObjectClass::MiCFrame) {
    throw UsageError("frames_collision expects two MiC frame localizations");
  }
  if (a.source_track == b.source_track) {
    throw UsageError("frames_collision: both localizations come from the same track");
  }
  const Eigen::Vector3d ea = resolve_extent(a, cfg).value_or(Eigen::Vector3d::Zero());
  const Eigen::Vector3d eb = resolve_extent(b, cfg).value_or(Eigen::Vector3d::Zero());
  Eigen::Vector3d gap;
  for (int i = 0; i < 3; ++i) {
    gap[i] = std::max(0.0, std::abs(a.position.xyz[i] - b.position.xyz[i]) - (ea[i] + eb[i]));
  }
  const double d = gap.norm();
  if (!(d < cfg.d_collision)) return std::nullopt;
  return Collision{std::min(a.source_track, b.source_track),
                   std::max(a.source_track, b.source_track), d};
}

bool passes_threshold(ObjectClass c, double confidence, const SafetyConfig& cfg) {
  return confidence >= (c == ObjectClass::Human ? cfg.conf_human : cfg.conf_large);
}

SafetyVerdict assess_frame(std::size_t frame_index,
                           std::span<const Localization3D> localizations,
                           std::span<const FusionFailure> failures,
                           const SafetyConfig& cfg) {
  SafetyVerdict v;
  v.frame_index = frame_index;
  std::vector<const Localization3D*> humans, frames;
  for (const Localization3D& loc : localizations) {
    if (!passes_threshold(loc.object_class, loc.confidence, cfg)) continue;
    switch (loc.object_class) {
      case ObjectClass::MiC:
        v.zones.push_back(build_danger_zone(loc, cfg));
        break;
      case ObjectClass::Human:
        humans.push_back(&loc);
        break;
      case ObjectClass::MiCFrame:
        frames.push_back(&loc);
        break;
    }
  }
  for (const Localization3D* h : humans) {
    const bool hit = std::any_of(v.zones.begin(), v.zones.end(),
                                 [h](const DangerZone& z) { return human_in_danger(z, *h); });
    if (hit) v.humans_in_danger.push_back({h->source_track, h->position});
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t j = i + 1; j < frames.size(); ++j) {
      if (frames[i]->source_track == frames[j]->source_track) continue;
      if (auto c = frames_collision(*frames[i], *frames[j], cfg)) v.collisions.push_back(*c);
    }
  }
  for (const FusionFailure& f : failures) v.fusion_failures.push_back(f.track);
  v.status = (v.humans_in_danger.empty() && v.collisions.empty()) ? SafetyStatus::Safe
                                                                   : SafetyStatus::Danger;
  return v;
}

json to_json(const SafetyVerdict& v) {
  json humans = json::array();
  for (const auto& h : v.humans_in_danger) {
    humans.push_back({{"track", h.track},
                      {"position", {h.position.xyz.x(), h.position.xyz.y(), h.position.xyz.z()}}});
  }
  json collisions = json::array();
  for (const auto& c : v.collisions) {
    collisions.push_back({{"tracks", {c.a, c.b}}, {"distance", c.distance}});
  }
  json zones = json::array();
  for (const auto& z : v.zones) {
    json fp = json::array();
    for (const auto& p : z.footprint) fp.push_back({p.x(), p.y()});
    zones.push_back({{"source", z.source_object},
                     {"inflated_by", z.inflated_by},
                     {"z", z.z},
                     {"footprint", fp}});
  }
  return json{{"frame", v.frame_index},
              {"status", v.status == SafetyStatus::Safe ? "safe" : "danger"},
              {"humans_in_danger", humans},
              {"collisions", collisions},
              {"zones", zones},
              {"fusion_failures", v.fusion_failures}};
}

}  // namespace liftwatch
