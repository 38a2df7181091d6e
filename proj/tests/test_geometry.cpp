#include <gtest/gtest.h>

#include <numbers>

#include "liftwatch/calibration.hpp"
#include "liftwatch/errors.hpp"
#include "liftwatch/geometry.hpp"
#include "support.hpp"

using namespace liftwatch;

namespace {

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

ExtrinsicSet with_l_T_c(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  return ExtrinsicSet(RigidTransform(r, t, Frame::Camera, Frame::Lidar),
                      RigidTransform::identity(Frame::Lidar, Frame::World));
}

}  // namespace

TEST(PixelToScaled, PrincipalPointMapsToAxis) {
  const ScaledPoint s = pixel_to_scaled(lwtest::example_k(), {2736, 1824});
  EXPECT_NEAR(s.a, 0.0, 1e-12);
  EXPECT_NEAR(s.b, 0.0, 1e-12);
  EXPECT_EQ(s.frame, Frame::Camera);
}

TEST(PixelToScaled, ThousandPixelOffset) {
  const ScaledPoint s = pixel_to_scaled(lwtest::example_k(), {3736, 1824});
  EXPECT_NEAR(s.a, 1.0, 1e-12);
  EXPECT_NEAR(s.b, 0.0, 1e-12);
}

TEST(PixelToScaled, WidthIsExclusive) {
  EXPECT_THROW(pixel_to_scaled(lwtest::example_k(), {5472, 0}), DomainError);
  EXPECT_THROW(pixel_to_scaled(lwtest::example_k(), {-0.5, 0}), DomainError);
  EXPECT_NO_THROW(pixel_to_scaled(lwtest::example_k(), {5471.9, 3647.9}));
}

TEST(PixelToScaled, AnalyticInverseRoundTrip) {
  auto g = lwtest::rng(11);
  for (int i = 0; i < 1000; ++i) {
    const CameraIntrinsics k = lwtest::random_intrinsics(g);
    const PixelPoint p{lwtest::uniform(g, 0, k.width), lwtest::uniform(g, 0, k.height)};
    if (!in_bounds(k, p)) continue;
    const PixelPoint q = scaled_to_pixel(k, pixel_to_scaled(k, p));
    EXPECT_NEAR(q.u, p.u, 1e-9);
    EXPECT_NEAR(q.v, p.v, 1e-9);
  }
}

TEST(Intrinsics, PinholeConversion) {
  const auto k = CameraIntrinsics::from_pinhole(1000, 1000, 2736, 1824, 5472, 3648);
  EXPECT_DOUBLE_EQ(k.f_x, 0.001);
  EXPECT_DOUBLE_EQ(k.c_x, -2.736);
  EXPECT_DOUBLE_EQ(k.c_y, -1.824);
}

TEST(Intrinsics, ValidateRejectsZeroGainAndEmptyImage) {
  auto k = lwtest::example_k();
  k.f_x = 0.0;
  EXPECT_THROW(k.validate(), DomainError);
  k = lwtest::example_k();
  k.height = 0;
  EXPECT_THROW(k.validate(), DomainError);
}

TEST(ScaledToLidarRay, IdentityOnAxis) {
  const Eigen::Vector3d d = scaled_to_lidar_ray(ExtrinsicSet::identity(), {0, 0, Frame::Camera});
  EXPECT_TRUE(d.isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
}

TEST(ScaledToLidarRay, IdentityNormalizes) {
  const Eigen::Vector3d d = scaled_to_lidar_ray(ExtrinsicSet::identity(), {1, 0, Frame::Camera});
  EXPECT_TRUE(d.isApprox(Eigen::Vector3d(1, 0, 1) / std::sqrt(2.0), 1e-12));
}

TEST(ScaledToLidarRay, QuarterTurnAboutX) {
  const ExtrinsicSet e = with_l_T_c(rot_x(-std::numbers::pi / 2), Eigen::Vector3d::Zero());
  const Eigen::Vector3d d = scaled_to_lidar_ray(e, {0, 0, Frame::Camera});
  // Hand product: Rx(-90) = [[1,0,0],[0,0,1],[0,-1,0]] applied to (0,0,1).
  Eigen::Matrix3d hand;
  hand << 1, 0, 0, 0, 0, 1, 0, -1, 0;
  EXPECT_TRUE(d.isApprox(hand * Eigen::Vector3d(0, 0, 1), 1e-12));
  EXPECT_NEAR(d.y(), 1.0, 1e-12);

  const ExtrinsicSet e2 = with_l_T_c(rot_x(std::numbers::pi / 2), Eigen::Vector3d::Zero());
  const Eigen::Vector3d d2 = scaled_to_lidar_ray(e2, {0, 0, Frame::Camera});
  EXPECT_TRUE(d2.isApprox(Eigen::Vector3d(0, -1, 0), 1e-12));
}

TEST(ScaledToLidarRay, RejectsLidarFrameInput) {
  EXPECT_THROW(scaled_to_lidar_ray(ExtrinsicSet::identity(), {0, 0, Frame::Lidar}), UsageError);
}

TEST(TransformPoint, IdentityAndTranslation) {
  const Point3 p{{1, 2, 3}, Frame::Camera};
  const auto id = RigidTransform::identity(Frame::Camera, Frame::Lidar);
  EXPECT_TRUE(transform_point(id, p).xyz.isApprox(Eigen::Vector3d(1, 2, 3)));
  const RigidTransform t(Eigen::Matrix3d::Identity(), {0, 0, 5}, Frame::Camera, Frame::Lidar);
  const Point3 q = transform_point(t, p);
  EXPECT_TRUE(q.xyz.isApprox(Eigen::Vector3d(1, 2, 8)));
  EXPECT_EQ(q.frame, Frame::Lidar);
}

TEST(TransformPoint, FrameMismatchIsUsageError) {
  const auto t = RigidTransform::identity(Frame::Camera, Frame::Lidar);
  EXPECT_THROW(transform_point(t, {{0, 0, 0}, Frame::World}), UsageError);
  EXPECT_THROW(compose(t, t), UsageError);
}

TEST(TransformPoint, RandomRoundTripAndIsometry) {
  auto g = lwtest::rng(3);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform t(lwtest::random_rotation(g), Eigen::Vector3d::Zero(), Frame::Lidar,
                           Frame::World);
    const Point3 p{lwtest::random_vec(g, -50, 50), Frame::Lidar};
    const Point3 q{lwtest::random_vec(g, -50, 50), Frame::Lidar};
    const Point3 back = transform_point(t.inverse(), transform_point(t, p));
    EXPECT_LT((back.xyz - p.xyz).norm(), 1e-9);
    EXPECT_EQ(back.frame, Frame::Lidar);
    const double d0 = (p.xyz - q.xyz).norm();
    const double d1 = (transform_point(t, p).xyz - transform_point(t, q).xyz).norm();
    EXPECT_NEAR(d0, d1, 1e-9);
  }
}

TEST(RigidTransform, ComposeWithInverseIsIdentity) {
  auto g = lwtest::rng(5);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform t(lwtest::random_rotation(g), lwtest::random_vec(g, -3, 3), Frame::Camera,
                           Frame::Lidar);
    const RigidTransform c = compose(t.inverse(), t);
    EXPECT_LT((c.rotation() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(c.translation().norm(), 1e-9);
    EXPECT_EQ(c.source(), Frame::Camera);
    EXPECT_EQ(c.target(), Frame::Camera);
  }
}

TEST(RigidTransform, RejectsNonRotation) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = -1.0;  // reflection
  EXPECT_THROW(RigidTransform(m, Eigen::Vector3d::Zero(), Frame::Camera, Frame::Lidar),
               DomainError);
  EXPECT_THROW(RigidTransform(2.0 * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(),
                              Frame::Camera, Frame::Lidar),
               DomainError);
}

TEST(ExtrinsicSet, RejectsWorldTranslation) {
  EXPECT_THROW(ExtrinsicSet(RigidTransform::identity(Frame::Camera, Frame::Lidar),
                            RigidTransform(Eigen::Matrix3d::Identity(), {0, 0, 1e-6},
                                           Frame::Lidar, Frame::World)),
               DomainError);
}

TEST(ExtrinsicSet, RejectsWrongFrames) {
  EXPECT_THROW(ExtrinsicSet(RigidTransform::identity(Frame::Lidar, Frame::Camera),
                            RigidTransform::identity(Frame::Lidar, Frame::World)),
               UsageError);
}

TEST(Reproject, OnAxisPoint) {
  const Reprojection r =
      reproject_world_to_pixel(lwtest::example_k(), ExtrinsicSet::identity(), {{0, 0, 40}, Frame::World});
  EXPECT_NEAR(r.pixel.u, 2736, 1e-9);
  EXPECT_NEAR(r.pixel.v, 1824, 1e-9);
  EXPECT_TRUE(r.in_frame);
  EXPECT_NEAR(r.z_c, 40, 1e-12);
}

TEST(Reproject, OnePixelOffset) {
  const Reprojection r = reproject_world_to_pixel(lwtest::example_k(), ExtrinsicSet::identity(),
                                                  {{0.04, 0, 40}, Frame::World});
  // u = (0.04/40 + 2.736) / 0.001
  EXPECT_NEAR(r.pixel.u, (0.04 / 40 + 2.736) / 0.001, 1e-9);
  EXPECT_NEAR(r.pixel.u, 2737, 1e-9);
  EXPECT_NEAR(r.pixel.v, 1824, 1e-9);
}

TEST(Reproject, BehindCamera) {
  EXPECT_THROW(reproject_world_to_pixel(lwtest::example_k(), ExtrinsicSet::identity(),
                                        {{0, 0, -1}, Frame::World}),
               BehindCameraError);
}

TEST(Reproject, OutOfFrustumIsFlagged) {
  const Reprojection r = reproject_world_to_pixel(lwtest::example_k(), ExtrinsicSet::identity(),
                                                  {{100, 0, 10}, Frame::World});
  EXPECT_FALSE(r.in_frame);
}

TEST(Reproject, ForwardThenBackIsIdentity) {
  auto g = lwtest::rng(17);
  int checked = 0;
  while (checked < 1000) {
    const CameraIntrinsics k = lwtest::random_intrinsics(g);
    const ExtrinsicSet e = lwtest::random_extrinsics(g);
    const PixelPoint p{lwtest::uniform(g, 0, k.width - 1), lwtest::uniform(g, 0, k.height - 1)};
    const double z_c = lwtest::uniform(g, 1.0, 80.0);
    const ScaledPoint s = pixel_to_scaled(k, p);
    const Point3 pc{{s.a * z_c, s.b * z_c, z_c}, Frame::Camera};
    const Point3 pw = camera_to_world(e, pc);
    ASSERT_EQ(pw.frame, Frame::World);
    const Reprojection r = reproject_world_to_pixel(k, e, pw);
    EXPECT_NEAR(r.pixel.u, p.u, 1e-6);
    EXPECT_NEAR(r.pixel.v, p.v, 1e-6);
    EXPECT_NEAR(r.z_c, z_c, 1e-9 * (1 + z_c));
    ++checked;
  }
}

TEST(PixelRay, StartsAtCameraCentre) {
  const ExtrinsicSet e = with_l_T_c(Eigen::Matrix3d::Identity(), {0.5, 0, 0});
  const LidarRay ray = pixel_ray(lwtest::example_k(), e, {2736, 1824});
  EXPECT_TRUE(ray.origin.isApprox(Eigen::Vector3d(0.5, 0, 0)));
  EXPECT_TRUE(ray.direction.isApprox(Eigen::Vector3d(0, 0, 1)));
}

TEST(Calibration, JsonRoundTrip) {
  auto g = lwtest::rng(23);
  Calibration c{lwtest::random_intrinsics(g), lwtest::random_extrinsics(g)};
  const Calibration d = calibration_from_json(to_json(c));
  EXPECT_EQ(d.intrinsics.width, c.intrinsics.width);
  EXPECT_DOUBLE_EQ(d.intrinsics.f_x, c.intrinsics.f_x);
  EXPECT_TRUE(d.extrinsics.l_T_c().rotation().isApprox(c.extrinsics.l_T_c().rotation(), 0));
  EXPECT_TRUE(d.extrinsics.l_T_c().translation().isApprox(c.extrinsics.l_T_c().translation(), 0));
}

TEST(Calibration, RowMajorRotation) {
  nlohmann::json j = to_json(Calibration{lwtest::example_k(), ExtrinsicSet::identity()});
  j["l_T_c"]["rotation"] = {1, 0, 0, 0, 0, -1, 0, 1, 0};  // Rx(+90)
  const Calibration c = calibration_from_json(j);
  EXPECT_TRUE(c.extrinsics.l_T_c().rotation().isApprox(rot_x(std::numbers::pi / 2), 1e-12));
}

TEST(Calibration, BadDocumentsAreRejected) {
  nlohmann::json j = to_json(Calibration{lwtest::example_k(), ExtrinsicSet::identity()});
  nlohmann::json bad = j;
  bad["w_T_l"]["translation"] = {0, 0, 1};
  EXPECT_THROW(calibration_from_json(bad), ConfigError);
  bad = j;
  bad["l_T_c"]["rotation"] = {1, 0, 0};
  EXPECT_THROW(calibration_from_json(bad), SchemaError);
  bad = j;
  bad["l_T_c"]["rotation"] = {2, 0, 0, 0, 1, 0, 0, 0, 1};
  EXPECT_THROW(calibration_from_json(bad), ConfigError);
}

TEST(CheckCalibration, ReportsProblemsWithoutThrowing) {
  nlohmann::json j = to_json(Calibration{lwtest::example_k(), ExtrinsicSet::identity()});
  EXPECT_TRUE(check_calibration(j).valid);
  j["w_T_l"]["translation"] = {0, 0.1, 0};
  j["l_T_c"]["rotation"] = {1, 0, 0, 0, 1, 0, 0, 0, -1};
  const CalibrationCheck c = check_calibration(j);
  EXPECT_FALSE(c.valid);
  EXPECT_EQ(c.problems.size(), 2u);
  EXPECT_NEAR(c.l_T_c_determinant, -1.0, 1e-12);
  EXPECT_NEAR(c.w_T_l_translation_norm, 0.1, 1e-12);
}

TEST(CheckCalibration, ResidualsOfExactCorrespondencesVanish) {
  auto g = lwtest::rng(29);
  const Calibration c{lwtest::example_k(), lwtest::random_extrinsics(g, 0.2)};
  std::vector<Correspondence> pairs;
  for (int i = 0; i < 50; ++i) {
    const PixelPoint p{lwtest::uniform(g, 0, 5471), lwtest::uniform(g, 0, 3647)};
    const ScaledPoint s = pixel_to_scaled(c.intrinsics, p);
    const double z = lwtest::uniform(g, 5, 50);
    const Point3 pl = transform_point(c.extrinsics.l_T_c(), {{s.a * z, s.b * z, z}, Frame::Camera});
    pairs.push_back({p, pl.xyz});
  }
  pairs.push_back({{0, 0}, -transform_point(c.extrinsics.l_T_c(), {{0, 0, 10}, Frame::Camera}).xyz +
                               2 * c.extrinsics.l_T_c().translation()});
  const ResidualReport r = reprojection_residuals(c, pairs);
  EXPECT_EQ(r.count, 50u);
  EXPECT_EQ(r.behind_camera, 1u);
  EXPECT_LT(r.max, 1e-6);
}
