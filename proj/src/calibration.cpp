#include "liftwatch/calibration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "liftwatch/errors.hpp"

namespace liftwatch {

using nlohmann::json;

namespace {

Eigen::Matrix3d read_rotation(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 9) {
    throw SchemaError(std::string(what) + ".rotation must be an array of 9 numbers");
  }
  Eigen::Matrix3d r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = j.at(i).get<double>();
  return r;
}

Eigen::Vector3d read_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw SchemaError(std::string(what) + " must be an array of 3 numbers");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json rotation_to_json(const Eigen::Matrix3d& r) {
  json a = json::array();
  for (int i = 0; i < 9; ++i) a.push_back(r(i / 3, i % 3));
  return a;
}

CameraIntrinsics read_intrinsics(const json& j) {
  CameraIntrinsics k;
  k.f_x = j.at("f_x").get<double>();
  k.f_y = j.at("f_y").get<double>();
  k.c_x = j.at("c_x").get<double>();
  k.c_y = j.at("c_y").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

}  // namespace

Calibration calibration_from_json(const json& j) {
  try {
    Calibration c;
    c.intrinsics = read_intrinsics(j.at("intrinsics"));
    c.intrinsics.validate();
    const json& lc = j.at("l_T_c");
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    if (lc.contains("translation")) t = read_vec3(lc.at("translation"), "l_T_c.translation");
    RigidTransform l_T_c(read_rotation(lc.at("rotation"), "l_T_c"), t,
                         Frame::Camera, Frame::Lidar);
    const json& wl = j.at("w_T_l");
    Eigen::Vector3d tw = Eigen::Vector3d::Zero();
    if (wl.contains("translation")) tw = read_vec3(wl.at("translation"), "w_T_l.translation");
    RigidTransform w_T_l(read_rotation(wl.at("rotation"), "w_T_l"), tw,
                         Frame::Lidar, Frame::World);
    c.extrinsics = ExtrinsicSet(l_T_c, w_T_l);
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("calibration: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
}

json to_json(const Calibration& c) {
  const auto& k = c.intrinsics;
  const auto& lc = c.extrinsics.l_T_c();
  const Eigen::Vector3d& t = lc.translation();
  return json{
      {"intrinsics",
       {{"f_x", k.f_x}, {"f_y", k.f_y}, {"c_x", k.c_x}, {"c_y", k.c_y},
        {"width", k.width}, {"height", k.height}}},
      {"l_T_c",
       {{"rotation", rotation_to_json(lc.rotation())},
        {"translation", {t.x(), t.y(), t.z()}}}},
      {"w_T_l", {{"rotation", rotation_to_json(c.extrinsics.w_T_l().rotation())}}}};
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return calibration_from_json(j);
}

void save_calibration(const Calibration& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write calibration file " + path.string());
  out << to_json(c).dump(2) << "\n";
}

CalibrationCheck check_calibration(const json& j) {
  CalibrationCheck r;
  auto fail = [&r](std::string why) {
    r.valid = false;
    r.problems.push_back(std::move(why));
  };
  auto measure = [](const Eigen::Matrix3d& m, double& ortho, double& det) {
    ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    det = m.determinant();
  };
  try {
    read_intrinsics(j.at("intrinsics")).validate();
  } catch (const std::exception& e) {
    fail(std::string("intrinsics: ") + e.what());
  }
  try {
    const Eigen::Matrix3d rot = read_rotation(j.at("l_T_c").at("rotation"), "l_T_c");
    measure(rot, r.l_T_c_orthonormality, r.l_T_c_determinant);
    if (!is_rotation(rot)) fail("l_T_c.rotation is not orthonormal with det +1");
    if (j.at("l_T_c").contains("translation")) {
      read_vec3(j.at("l_T_c").at("translation"), "l_T_c.translation");
    }
  } catch (const std::exception& e) {
    fail(std::string("l_T_c: ") + e.what());
  }
  try {
    const json& wl = j.at("w_T_l");
    const Eigen::Matrix3d rot = read_rotation(wl.at("rotation"), "w_T_l");
    measure(rot, r.w_T_l_orthonormality, r.w_T_l_determinant);
    if (!is_rotation(rot)) fail("w_T_l.rotation is not orthonormal with det +1");
    if (wl.contains("translation")) {
      const Eigen::Vector3d t = read_vec3(wl.at("translation"), "w_T_l.translation");
      r.w_T_l_translation_norm = t.norm();
      if (t != Eigen::Vector3d::Zero()) fail("w_T_l.translation must be zero");
    }
  } catch (const std::exception& e) {
    fail(std::string("w_T_l: ") + e.what());
  }
  return r;
}

ResidualReport reprojection_residuals(const Calibration& c,
                                      const std::vector<Correspondence>& pairs) {
  ResidualReport rep;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& pc : pairs) {
    Reprojection proj;
    try {
      proj = reproject_lidar_to_pixel(c.intrinsics, c.extrinsics,
                                      {pc.lidar, Frame::Lidar});
    } catch (const BehindCameraError&) {
      ++rep.behind_camera;
      continue;
    }
    const double d = std::hypot(proj.pixel.u - pc.pixel.u, proj.pixel.v - pc.pixel.v);
    ++rep.count;
    sum += d;
    sum_sq += d * d;
    rep.max = std::max(rep.max, d);
  }
  if (rep.count > 0) {
    rep.mean = sum / static_cast<double>(rep.count);
    rep.rms = std::sqrt(sum_sq / static_cast<double>(rep.count));
  }
  return rep;
}

std::vector<Correspondence> load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open correspondences file " + path.string());
  std::vector<Correspondence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const json& px = j.at("pixel");
      if (!px.is_array() || px.size() != 2) throw SchemaError("pixel must be [u,v]", line_no);
      Correspondence c;
      c.pixel = {px.at(0).get<double>(), px.at(1).get<double>()};
      c.lidar = read_vec3(j.at("lidar"), "lidar");
      out.push_back(c);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace liftwatch
