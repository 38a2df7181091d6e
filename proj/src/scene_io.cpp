#include <fstream>

#include "liftwatch/errors.hpp"
#include "liftwatch/simulator.hpp"

namespace liftwatch {

using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

LidarModel lidar_from_json(const json& j) {
  LidarModel m;
  const std::string pattern = j.value("pattern", std::string("grid"));
  if (pattern == "grid") {
    GridPattern g;
    g.rows = j.value("rows", g.rows);
    g.cols = j.value("cols", g.cols);
    g.fov_h = j.value("fov_h", g.fov_h);
    g.fov_v = j.value("fov_v", g.fov_v);
    m.pattern = g;
    m.points_per_frame = static_cast<std::size_t>(std::max(0, g.rows) * std::max(0, g.cols));
  } else if (pattern == "rosette") {
    RosettePattern r;
    r.petals = j.value("petals", r.petals);
    r.points_per_petal = j.value("points_per_petal", r.points_per_petal);
    r.fov = j.value("fov", r.fov);
    m.pattern = r;
    m.points_per_frame =
        static_cast<std::size_t>(std::max(0, r.petals) * std::max(0, r.points_per_petal));
  } else {
    throw ConfigError("lidar.pattern must be grid or rosette");
  }
  m.points_per_frame = j.value("points_per_frame", m.points_per_frame);
  m.range_noise_sigma = j.value("range_noise_sigma", m.range_noise_sigma);
  m.max_range = j.value("max_range", m.max_range);
  return m;
}

json lidar_to_json(const LidarModel& m) {
  json j;
  if (const auto* g = std::get_if<GridPattern>(&m.pattern)) {
    j = {{"pattern", "grid"}, {"rows", g->rows}, {"cols", g->cols},
         {"fov_h", g->fov_h}, {"fov_v", g->fov_v}};
  } else {
    const auto& r = std::get<RosettePattern>(m.pattern);
    j = {{"pattern", "rosette"}, {"petals", r.petals},
         {"points_per_petal", r.points_per_petal}, {"fov", r.fov}};
  }
  j["points_per_frame"] = m.points_per_frame;
  j["range_noise_sigma"] = m.range_noise_sigma;
  j["max_range"] = m.max_range;
  return j;
}

SceneObject object_from_json(const json& j) {
  SceneObject o;
  o.id = j.at("id").get<std::int64_t>();
  o.object_class = class_from_string(j.at("class").get<std::string>());
  const json& shape = j.at("shape");
  if (shape.contains("box")) {
    o.shape = BoxShape{vec3(shape.at("box"), "shape.box")};
  } else if (shape.contains("cylinder")) {
    const json& c = shape.at("cylinder");
    o.shape = CylinderShape{c.at("radius").get<double>(), c.at("height").get<double>()};
  } else {
    throw ConfigError("object shape must be {\"box\": [...]} or {\"cylinder\": {...}}");
  }
  const double yaw = j.value("yaw", 0.0);
  if (j.contains("waypoints")) {
    for (const json& w : j.at("waypoints")) {
      o.motion.push_back({w.at("frame").get<std::size_t>(), vec3(w.at("position"), "position"),
                          w.value("yaw", yaw)});
    }
  } else {
    o.motion.push_back({0, vec3(j.at("position"), "position"), yaw});
  }
  return o;
}

json object_to_json(const SceneObject& o) {
  json shape;
  if (const auto* b = std::get_if<BoxShape>(&o.shape)) {
    shape = {{"box", vec3_json(b->half_extents)}};
  } else {
    const auto& c = std::get<CylinderShape>(o.shape);
    shape = {{"cylinder", {{"radius", c.radius}, {"height", c.height}}}};
  }
  json wps = json::array();
  for (const auto& w : o.motion) {
    wps.push_back({{"frame", w.frame}, {"position", vec3_json(w.position)}, {"yaw", w.yaw}});
  }
  return {{"id", o.id}, {"class", to_string(o.object_class)}, {"shape", shape},
          {"waypoints", wps}};
}

}  // namespace

Scene scene_from_json(const json& j) {
  Scene s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.frames = j.value("frames", std::size_t{1});
    s.frame_period = j.value("frame_period", 0.1);
    s.detector_noise_px = j.value("detector_noise_px", 0.0);
    Calibration c = default_sim_calibration();
    if (j.contains("camera") || j.contains("extrinsics")) {
      json cj = to_json(c);
      if (j.contains("camera")) cj["intrinsics"] = j.at("camera");
      if (j.contains("extrinsics")) {
        for (const auto& [key, v] : j.at("extrinsics").items()) cj[key] = v;
      }
      c = calibration_from_json(cj);
    }
    s.calibration = c;
    if (j.contains("lidar")) s.lidar = lidar_from_json(j.at("lidar"));
    if (j.contains("ground_z") && !j.at("ground_z").is_null()) {
      s.ground_z = j.at("ground_z").get<double>();
    }
    if (j.contains("safety")) s.safety = safety_from_json(j.at("safety"));
    for (const json& o : j.value("objects", json::array())) {
      s.objects.push_back(object_from_json(o));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const Scene& s) {
  json cal = to_json(s.calibration);
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back(object_to_json(o));
  json j = {{"seed", s.seed},
            {"frames", s.frames},
            {"frame_period", s.frame_period},
            {"detector_noise_px", s.detector_noise_px},
            {"camera", cal.at("intrinsics")},
            {"extrinsics", {{"l_T_c", cal.at("l_T_c")}, {"w_T_l", cal.at("w_T_l")}}},
            {"lidar", lidar_to_json(s.lidar)},
            {"objects", objects},
            {"safety", to_json(s.safety)}};
  j["ground_z"] = s.ground_z ? json(*s.ground_z) : json(nullptr);
  return j;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

json to_json(const ObjectTruth& t, std::size_t frame) {
  json sil = json::array();
  for (const auto& p : t.silhouette) sil.push_back({p.x(), p.y()});
  json j = {{"frame", frame},
            {"class", to_string(t.object_class)},
            {"bbox", {t.bbox.u_min, t.bbox.v_min, t.bbox.u_max, t.bbox.v_max}},
            {"confidence", 1.0},
            {"object_id", t.object_id},
            {"truth_pos", vec3_json(t.truth_pos)},
            {"position", vec3_json(t.position)},
            {"yaw", t.yaw},
            {"silhouette", sil}};
  if (t.extent) j["extent"] = vec3_json(*t.extent);
  return j;
}

ObjectTruth truth_from_json(const json& j, std::size_t line) {
  try {
    ObjectTruth t;
    const Detection2D d = detection_from_json(j, line);
    t.object_class = d.object_class;
    t.bbox = d.bbox;
    t.visible = true;
    t.object_id = j.value("object_id", std::int64_t{0});
    const json& tp = j.at("truth_pos");
    if (!tp.is_array() || tp.size() != 3) throw SchemaError("truth_pos must be [x,y,z]", line);
    t.truth_pos = {tp[0].get<double>(), tp[1].get<double>(), tp[2].get<double>()};
    t.position = t.truth_pos;
    if (j.contains("position")) {
      const json& p = j.at("position");
      t.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
    t.yaw = j.value("yaw", 0.0);
    if (j.contains("extent")) {
      const json& e = j.at("extent");
      t.extent = Eigen::Vector3d(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
    }
    for (const json& p : j.value("silhouette", json::array())) {
      t.silhouette.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    return t;
  } catch (const json::exception& e) {
    throw SchemaError(e.what(), line);
  }
}

std::map<std::size_t, std::vector<ObjectTruth>> load_ground_truth(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ground truth file " + path.string());
  std::map<std::size_t, std::vector<ObjectTruth>> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    const std::size_t frame = j.value("frame", std::size_t{0});
    out[frame].push_back(truth_from_json(j, line));
  }
  return out;
}

}  // namespace liftwatch
