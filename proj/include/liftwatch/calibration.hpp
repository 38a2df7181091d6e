#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "liftwatch/geometry.hpp"

namespace liftwatch {

struct Calibration {
  CameraIntrinsics intrinsics;
  ExtrinsicSet extrinsics = ExtrinsicSet::identity();
};

// Calibration document:
//   {"intrinsics": {"f_x","f_y","c_x","c_y","width","height"},
//    "l_T_c": {"rotation": [9 row-major], "translation": [3]},
//    "w_T_l": {"rotation": [9 row-major]}}
// A w_T_l "translation" key is accepted only if it is all zeros.
Calibration calibration_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Calibration& c);

Calibration load_calibration(const std::filesystem::path& path);
void save_calibration(const Calibration& c, const std::filesystem::path& path);

/// Validity findings for a calibration document, gathered without throwing.
struct CalibrationCheck {
  bool valid = true;
  std::vector<std::string> problems;
  double l_T_c_orthonormality = 0.0;  // max |R^T R - I|
  double l_T_c_determinant = 0.0;
  double w_T_l_orthonormality = 0.0;
  double w_T_l_determinant = 0.0;
  double w_T_l_translation_norm = 0.0;
};

CalibrationCheck check_calibration(const nlohmann::json& j);

/// An annotated pixel / LiDAR-point pair.
struct Correspondence {
  PixelPoint pixel;
  Eigen::Vector3d lidar = Eigen::Vector3d::Zero();
};

struct ResidualReport {
  std::size_t count = 0;
  std::size_t behind_camera = 0;
  double mean = 0.0;
  double rms = 0.0;
  double max = 0.0;
};

/// Pixel distance between each annotated pixel and its LiDAR point reprojected
/// through the calibration. Points behind the camera are counted, not scored.
ResidualReport reprojection_residuals(const Calibration& c,
                                      const std::vector<Correspondence>& pairs);

/// Reads `{"pixel":[u,v],"lidar":[x,y,z]}` lines.
std::vector<Correspondence> load_correspondences(const std::filesystem::path& path);

}  // namespace liftwatch
