#pragma once

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "liftwatch/calibration.hpp"
#include "liftwatch/geometry.hpp"

namespace lwtest {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

/// Uniformly distributed rotation from a normalized Gaussian quaternion.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(g), n(g), n(g), n(g));
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_vec(std::mt19937_64& g, double lo, double hi) {
  return {uniform(g, lo, hi), uniform(g, lo, hi), uniform(g, lo, hi)};
}

/// The 5472 x 3648 sensor with 0.001 gain and centred principal point.
inline liftwatch::CameraIntrinsics example_k() {
  liftwatch::CameraIntrinsics k;
  k.f_x = 0.001;
  k.f_y = 0.001;
  k.c_x = -2.736;
  k.c_y = -1.824;
  k.width = 5472;
  k.height = 3648;
  return k;
}

inline liftwatch::CameraIntrinsics random_intrinsics(std::mt19937_64& g) {
  const double f = uniform(g, 800.0, 4000.0);
  const int w = static_cast<int>(uniform(g, 640.0, 6000.0));
  const int h = static_cast<int>(uniform(g, 480.0, 4000.0));
  return liftwatch::CameraIntrinsics::from_pinhole(
      f, f * uniform(g, 0.9, 1.1), w / 2.0 + uniform(g, -40, 40),
      h / 2.0 + uniform(g, -40, 40), w, h);
}

inline liftwatch::ExtrinsicSet random_extrinsics(std::mt19937_64& g, double max_t = 0.5) {
  using liftwatch::Frame;
  using liftwatch::RigidTransform;
  return liftwatch::ExtrinsicSet(
      RigidTransform(random_rotation(g), random_vec(g, -max_t, max_t), Frame::Camera, Frame::Lidar),
      RigidTransform(random_rotation(g), Eigen::Vector3d::Zero(), Frame::Lidar, Frame::World));
}

}  // namespace lwtest
