#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "liftwatch/depth_fusion.hpp"
#include "liftwatch/errors.hpp"
#include "liftwatch/oracle.hpp"
#include "liftwatch/simulator.hpp"
#include "support.hpp"

using namespace liftwatch;

namespace {

ObjectPose box_pose(std::int64_t id, const Eigen::Vector3d& c, const Eigen::Vector3d& h,
                    double yaw = 0.0) {
  return {id, ObjectClass::MiC, BoxShape{h}, c, yaw};
}

ObjectPose human_pose(std::int64_t id, const Eigen::Vector3d& base) {
  return {id, ObjectClass::Human, CylinderShape{0.3, 1.7}, base, 0.0};
}

// Signed distance from p to a shape; negative inside.
double sdf(const ObjectPose& pose, const Eigen::Vector3d& p) {
  if (const auto* b = std::get_if<BoxShape>(&pose.shape)) {
    const Eigen::Vector3d rel = p - pose.position;
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    const Eigen::Vector3d local(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z());
    const Eigen::Vector3d q = local.cwiseAbs() - b->half_extents;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  }
  const auto& cyl = std::get<CylinderShape>(pose.shape);
  const Eigen::Vector3d mid = pose.position - Eigen::Vector3d(0, 0, cyl.height / 2);
  const Eigen::Vector3d rel = p - mid;
  const Eigen::Vector2d d(rel.head<2>().norm() - cyl.radius, std::abs(rel.z()) - cyl.height / 2);
  return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
}

Scene base_scene() {
  Scene s;
  s.seed = 99;
  s.calibration = default_sim_calibration();
  return s;
}

Calibration example_calibration() {
  Calibration c;
  c.intrinsics = lwtest::example_k();
  c.extrinsics = ExtrinsicSet::identity();
  return c;
}

}  // namespace

TEST(Raycast, EmptySceneIsAllZeros) {
  const LidarModel lidar;
  const PointCloud c = raycast_frame({}, std::nullopt, lidar, ExtrinsicSet::identity(), 1, 0);
  ASSERT_EQ(c.size(), 24000u);
  for (const auto& p : c.points) EXPECT_EQ(p, Eigen::Vector3d::Zero());
}

TEST(Raycast, CoveringBoxReturnsLieOnItsSurface) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, 40}, {100, 100, 10})};
  const PointCloud c = raycast_frame(poses, std::nullopt, LidarModel{}, ExtrinsicSet::identity(), 1, 0);
  ASSERT_EQ(c.size(), 24000u);
  for (const auto& p : c.points) {
    ASSERT_NE(p, Eigen::Vector3d::Zero());
    EXPECT_NEAR(p.z(), 30.0, 1e-6);
    EXPECT_LT(std::abs(sdf(poses[0], p)), 1e-6);
  }
}

TEST(Raycast, NearerOfTwoStackedBoxes) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, 40}, {100, 100, 1}),
                                      box_pose(2, {0, 0, 20}, {1, 1, 1})};
  LidarModel lidar;
  lidar.pattern = GridPattern{1, 1, 0.1, 0.1};
  lidar.points_per_frame = 1;
  const PointCloud c = raycast_frame(poses, std::nullopt, lidar, ExtrinsicSet::identity(), 1, 0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c.points[0].z(), 19.0, 1e-9);
}

TEST(Raycast, ReturnsAreFirstSurfaceHits) {
  auto g = lwtest::rng(701);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ObjectPose> poses;
    for (int i = 0; i < 4; ++i) {
      poses.push_back(box_pose(i, {lwtest::uniform(g, -8, 8), lwtest::uniform(g, -5, 5), lwtest::uniform(g, 20, 45)},
                               lwtest::random_vec(g, 0.5, 3), lwtest::uniform(g, -3, 3)));
    }
    for (int i = 0; i < 4; ++i) {
      poses.push_back(human_pose(10 + i, {lwtest::uniform(g, -8, 8), lwtest::uniform(g, -5, 5), 50}));
    }
    LidarModel lidar;
    lidar.pattern = GridPattern{60, 100, 0.7, 0.42};
    lidar.points_per_frame = 6000;
    if (trial % 2 == 1) {
      lidar.pattern = RosettePattern{6, 1000, 0.7};
    }
    const PointCloud c = raycast_frame(poses, 50.0, lidar, ExtrinsicSet::identity(), 3, trial);
    std::size_t hits = 0;
    for (const auto& r : c.points) {
      if (r == Eigen::Vector3d::Zero()) continue;
      ++hits;
      double best = std::abs(r.z() - 50.0);
      for (const auto& p : poses) best = std::min(best, std::abs(sdf(p, r)));
      EXPECT_LT(best, 1e-6);
      // Nothing solid strictly before the return.
      const double len = r.norm();
      for (int k = 1; k < 200; ++k) {
        const double t = len * k / 200.0;
        if (t > len - 1e-4) break;
        const Eigen::Vector3d q = r * (t / len);
        EXPECT_LT(q.z(), 50.0 + 1e-9);
        for (const auto& p : poses) EXPECT_GT(sdf(p, q), -1e-9);
      }
    }
    EXPECT_GT(hits, 1000u);
  }
}

TEST(Raycast, NoiseIsAlongTheRayAndDeterministic) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, 40}, {100, 100, 10})};
  LidarModel lidar;
  lidar.range_noise_sigma = 0.05;
  const PointCloud a = raycast_frame(poses, std::nullopt, lidar, ExtrinsicSet::identity(), 7, 3);
  const PointCloud b = raycast_frame(poses, std::nullopt, lidar, ExtrinsicSet::identity(), 7, 3);
  const PointCloud other = raycast_frame(poses, std::nullopt, lidar, ExtrinsicSet::identity(), 7, 4);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.points.data(), b.points.data(), a.size() * sizeof(Eigen::Vector3d)), 0);
  EXPECT_NE(a.points[0], other.points[0]);
  double sum = 0, sq = 0;
  const auto dirs = lidar.ray_directions(3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double range = a.points[i].norm();
    EXPECT_NEAR((a.points[i] / range - dirs[i]).norm(), 0.0, 1e-9);
    const double err = range - 30.0 / dirs[i].z();
    sum += err;
    sq += err * err;
  }
  const double n = static_cast<double>(a.size());
  EXPECT_NEAR(sum / n, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(sq / n), 0.05, 0.005);
}

TEST(Raycast, MaxRangeGivesZeros) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, 40}, {100, 100, 10})};
  LidarModel lidar;
  lidar.max_range = 25;
  const PointCloud c = raycast_frame(poses, std::nullopt, lidar, ExtrinsicSet::identity(), 1, 0);
  for (const auto& p : c.points) EXPECT_EQ(p, Eigen::Vector3d::Zero());
}

TEST(LidarModelTest, PatternsAndValidation) {
  LidarModel m;
  const auto grid = m.ray_directions();
  ASSERT_EQ(grid.size(), 24000u);
  for (const auto& d : grid) {
    EXPECT_NEAR(d.norm(), 1.0, 1e-12);
    EXPECT_GT(d.z(), 0.0);
  }
  m.pattern = RosettePattern{};
  const auto r0 = m.ray_directions(0);
  const auto r1 = m.ray_directions(1);
  ASSERT_EQ(r0.size(), 24000u);
  EXPECT_NE(r0[5], r1[5]);
  m.points_per_frame = 1000;
  EXPECT_THROW(m.validate(), ConfigError);
  m = LidarModel{};
  m.pattern = GridPattern{120, 200, 3.5, 0.4};
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(GroundTruth, OnAxisUnitBoxIsCentred) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, 40}, {0.5, 0.5, 0.5})};
  const GroundTruthFrame t = project_ground_truth(poses, example_calibration(), 0);
  ASSERT_EQ(t.objects.size(), 1u);
  ASSERT_TRUE(t.objects[0].visible);
  EXPECT_NEAR(t.objects[0].bbox.center().u, 2736.0, 1e-9);
  EXPECT_NEAR(t.objects[0].bbox.center().v, 1824.0, 1e-9);
  EXPECT_FALSE(t.objects[0].silhouette.empty());
  EXPECT_TRUE(t.objects[0].truth_pos.isApprox(Eigen::Vector3d(0, 0, 39.5)));
}

TEST(GroundTruth, BehindCameraIsInvisible) {
  const std::vector<ObjectPose> poses{box_pose(1, {0, 0, -10}, {1, 1, 1}),
                                      human_pose(2, {0, 0, 1.0})};
  const GroundTruthFrame t = project_ground_truth(poses, example_calibration(), 0);
  ASSERT_EQ(t.objects.size(), 2u);
  for (const auto& o : t.objects) {
    EXPECT_FALSE(o.visible);
    EXPECT_TRUE(o.silhouette.empty());
  }
}

TEST(GroundTruth, OutsideFrustumIsInvisibleAndGetsNoDetection) {
  const std::vector<ObjectPose> poses{box_pose(1, {200, 0, 30}, {1, 1, 1})};
  const GroundTruthFrame t = project_ground_truth(poses, example_calibration(), 0);
  EXPECT_FALSE(t.objects[0].visible);
  EXPECT_TRUE(oracle_detector(t, lwtest::example_k(), 0.0, 1).empty());
}

TEST(GroundTruth, CornersInsideBox) {
  auto g = lwtest::rng(709);
  const Calibration cal = example_calibration();
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const ObjectPose p = box_pose(1, {lwtest::uniform(g, -15, 15), lwtest::uniform(g, -10, 10), lwtest::uniform(g, 20, 60)},
                                  lwtest::random_vec(g, 0.2, 4), lwtest::uniform(g, -3.2, 3.2));
    const GroundTruthFrame t = project_ground_truth({p}, cal, 0);
    const auto& b = std::get<BoxShape>(p.shape).half_extents;
    if (!t.objects[0].visible) continue;
    const BBox& box = t.objects[0].bbox;
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    bool all_in = true;
    std::vector<PixelPoint> px;
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        for (int sz : {-1, 1}) {
          const Eigen::Vector3d l(sx * b.x(), sy * b.y(), sz * b.z());
          const Eigen::Vector3d w(p.position.x() + c * l.x() - s * l.y(),
                                  p.position.y() + s * l.x() + c * l.y(), p.position.z() + l.z());
          const Reprojection r = reproject_world_to_pixel(cal.intrinsics, cal.extrinsics, {w, Frame::World});
          all_in = all_in && r.in_frame;
          px.push_back(r.pixel);
        }
      }
    }
    if (!all_in) continue;
    ++checked;
    double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
    for (const auto& q : px) {
      EXPECT_GE(q.u, box.u_min - 1e-6);
      EXPECT_LE(q.u, box.u_max + 1e-6);
      EXPECT_GE(q.v, box.v_min - 1e-6);
      EXPECT_LE(q.v, box.v_max + 1e-6);
      u0 = std::min(u0, q.u);
      u1 = std::max(u1, q.u);
      v0 = std::min(v0, q.v);
      v1 = std::max(v1, q.v);
    }
    // The box is tight around the corners.
    EXPECT_NEAR(box.u_min, u0, 1e-6);
    EXPECT_NEAR(box.u_max, u1, 1e-6);
    EXPECT_NEAR(box.v_min, v0, 1e-6);
    EXPECT_NEAR(box.v_max, v1, 1e-6);
  }
  EXPECT_GT(checked, 300);
}

TEST(StepMotion, Examples) {
  Scene s = base_scene();
  s.frames = 20;
  SceneObject a;
  a.id = 1;
  a.motion = {{0, {0, 0, 30}, 0.0}, {10, {10, 0, 30}, 1.0}};
  SceneObject b;
  b.id = 2;
  b.motion = {{0, {3, 4, 35}, 0.25}};
  s.objects = {a, b};
  const auto p5 = step_motion(s, 5);
  EXPECT_TRUE(p5[0].position.isApprox(Eigen::Vector3d(5, 0, 30)));
  EXPECT_DOUBLE_EQ(p5[0].yaw, 0.5);
  EXPECT_EQ(p5[1].position, Eigen::Vector3d(3, 4, 35));
  EXPECT_EQ(step_motion(s, 10)[0].position, Eigen::Vector3d(10, 0, 30));
  EXPECT_THROW(step_motion(s, 11), EndOfScenario);
  s.objects = {b};
  EXPECT_EQ(step_motion(s, 19)[0].position, Eigen::Vector3d(3, 4, 35));
  EXPECT_THROW(step_motion(s, 20), EndOfScenario);
}

TEST(StepMotion, HoldsBeforeFirstWaypoint) {
  Scene s = base_scene();
  s.frames = 20;
  SceneObject a;
  a.motion = {{4, {1, 0, 30}, 0.0}, {8, {5, 0, 30}, 0.0}};
  s.objects = {a};
  EXPECT_EQ(step_motion(s, 0)[0].position, Eigen::Vector3d(1, 0, 30));
  EXPECT_TRUE(step_motion(s, 6)[0].position.isApprox(Eigen::Vector3d(3, 0, 30)));
}

TEST(SceneObjectTest, Validation) {
  SceneObject o;
  o.motion = {};
  EXPECT_THROW(o.validate(), ConfigError);
  o.motion = {{3, {0, 0, 1}, 0}, {3, {0, 0, 2}, 0}};
  EXPECT_THROW(o.validate(), ConfigError);
  o.motion = {{0, {0, 0, 1}, 0}};
  o.shape = BoxShape{Eigen::Vector3d(1, 0, 1)};
  EXPECT_THROW(o.validate(), ConfigError);
  o.shape = CylinderShape{0.3, -1};
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(Simulate, DeterministicFromSeed) {
  Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  const SimulatedFrame a = simulate_frame(s, 12);
  const SimulatedFrame b = simulate_frame(s, 12);
  ASSERT_EQ(a.cloud.size(), b.cloud.size());
  EXPECT_EQ(std::memcmp(a.cloud.points.data(), b.cloud.points.data(),
                        a.cloud.size() * sizeof(Eigen::Vector3d)),
            0);
  ASSERT_EQ(a.truth.objects.size(), b.truth.objects.size());
  for (std::size_t i = 0; i < a.truth.objects.size(); ++i) {
    EXPECT_EQ(a.truth.objects[i].bbox, b.truth.objects[i].bbox);
  }
  const auto da = oracle_detector(a.truth, s.calibration.intrinsics, 2.0, s.seed);
  const auto db = oracle_detector(b.truth, s.calibration.intrinsics, 2.0, s.seed);
  ASSERT_EQ(da.size(), db.size());
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i].bbox, db[i].bbox);
  EXPECT_DOUBLE_EQ(a.timestamp, 12 * s.frame_period);
}

TEST(Simulate, CandidatesUnderSilhouetteSitOnTheSurface) {
  Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  const double sigma = s.lidar.range_noise_sigma;
  ASSERT_GT(sigma, 0.0);
  for (std::size_t f : {0u, 20u, 40u}) {
    const SimulatedFrame sim = simulate_frame(s, f);
    const PointCloud cloud = preprocess(sim.cloud, {1e-6, 1e-4});
    for (const auto& t : sim.truth.objects) {
      if (!t.visible || t.object_class != ObjectClass::MiC) continue;
      const auto mask = oracle_segmenter(t, t.bbox);
      ASSERT_TRUE(mask);
      Detection2D d;
      d.object_class = t.object_class;
      d.bbox = t.bbox;
      const auto px = fusion_pixels(d, &*mask, s.calibration.intrinsics, 4096);
      const auto cand = collect_depth_candidates(px, cloud, s.calibration.intrinsics,
                                                 s.calibration.extrinsics, kDefaultThetaMax);
      ASSERT_FALSE(cand.values.empty());
      // Top-face returns: z within 3 sigma of the truth depth.
      std::size_t on_top = 0;
      for (double z : cand.values) on_top += std::abs(z - t.truth_pos.z()) <= 3 * sigma;
      EXPECT_GT(static_cast<double>(on_top), 0.95 * static_cast<double>(cand.values.size()));
    }
  }
}

TEST(Oracle, NoiseFreeBoxesEqualTruth) {
  const Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  const SimulatedFrame sim = simulate_frame(s, 5);
  const auto dets = oracle_detector(sim.truth, s.calibration.intrinsics, 0.0, 1);
  std::size_t visible = 0;
  for (const auto& t : sim.truth.objects) visible += t.visible;
  ASSERT_EQ(dets.size(), visible);
  std::size_t i = 0;
  for (const auto& t : sim.truth.objects) {
    if (!t.visible) continue;
    EXPECT_EQ(dets[i].bbox, t.bbox);
    EXPECT_EQ(dets[i].confidence, 1.0);
    EXPECT_EQ(dets[i].object_class, t.object_class);
    ++i;
  }
}

TEST(Oracle, NoisyCornersWithinBound) {
  const Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  for (std::size_t f = 0; f < 100 && f < s.frames; ++f) {
    const SimulatedFrame sim = simulate_frame(s, f);
    const auto dets = oracle_detector(sim.truth, s.calibration.intrinsics, 2.0, s.seed);
    std::size_t i = 0;
    for (const auto& t : sim.truth.objects) {
      if (!t.visible) continue;
      const BBox& d = dets[i++].bbox;
      EXPECT_LE(std::abs(d.u_min - t.bbox.u_min), 2.0);
      EXPECT_LE(std::abs(d.v_min - t.bbox.v_min), 2.0);
      EXPECT_LE(std::abs(d.u_max - t.bbox.u_max), 2.0);
      EXPECT_LE(std::abs(d.v_max - t.bbox.v_max), 2.0);
      EXPECT_TRUE(d.valid());
    }
  }
}

TEST(Oracle, SegmenterStaysInsidePromptAndSilhouette) {
  auto g = lwtest::rng(719);
  const Calibration cal = example_calibration();
  for (int i = 0; i < 200; ++i) {
    const ObjectPose p = box_pose(1, {lwtest::uniform(g, -3, 3), lwtest::uniform(g, -3, 3), lwtest::uniform(g, 20, 40)},
                                  lwtest::random_vec(g, 0.1, 1.0), lwtest::uniform(g, -3, 3));
    const GroundTruthFrame t = project_ground_truth({p}, cal, 0);
    if (!t.objects[0].visible) continue;
    const BBox tb = t.objects[0].bbox;
    const BBox prompt{tb.u_min + lwtest::uniform(g, -20, 20), tb.v_min + lwtest::uniform(g, -20, 20),
                      tb.u_max + lwtest::uniform(g, -20, 20), tb.v_max + lwtest::uniform(g, -20, 20)};
    const auto mask = oracle_segmenter(t.objects[0], prompt);
    std::size_t brute = 0;
    for (int v = static_cast<int>(std::ceil(prompt.v_min)); v <= prompt.v_max; ++v) {
      for (int u = static_cast<int>(std::ceil(prompt.u_min)); u <= prompt.u_max; ++u) {
        brute += point_in_convex_polygon(t.objects[0].silhouette, {u, v}, 1e-9);
      }
    }
    if (!mask) {
      EXPECT_EQ(brute, 0u);
      continue;
    }
    for (const auto& q : mask->pixels()) {
      EXPECT_GE(q.u, prompt.u_min);
      EXPECT_LE(q.u, prompt.u_max);
      EXPECT_GE(q.v, prompt.v_min);
      EXPECT_LE(q.v, prompt.v_max);
      EXPECT_TRUE(point_in_convex_polygon(t.objects[0].silhouette, {q.u, q.v}, 1e-6));
    }
    EXPECT_EQ(mask->count(), brute);
  }
}

TEST(SceneIo, JsonRoundTripAndTruthRecords) {
  const Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  const Scene back = scene_from_json(to_json(s));
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.frames, s.frames);
  ASSERT_EQ(back.objects.size(), s.objects.size());
  EXPECT_EQ(back.objects[0].motion.back().position, s.objects[0].motion.back().position);
  EXPECT_EQ(back.ground_z, s.ground_z);
  EXPECT_EQ(back.safety.z_top, s.safety.z_top);
  EXPECT_EQ(to_json(back), to_json(s));

  const SimulatedFrame sim = simulate_frame(s, 0);
  for (const auto& t : sim.truth.objects) {
    if (!t.visible) continue;
    const ObjectTruth r = truth_from_json(to_json(t, 0));
    EXPECT_EQ(r.bbox, t.bbox);
    EXPECT_EQ(r.truth_pos, t.truth_pos);
    EXPECT_EQ(r.object_id, t.object_id);
    EXPECT_EQ(r.silhouette.size(), t.silhouette.size());
  }
  EXPECT_THROW(scene_from_json(nlohmann::json{{"frames", 0}}), ConfigError);
}

TEST(Render, WritesPpm) {
  const Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  const SimulatedFrame sim = simulate_frame(s, 0);
  const auto path = std::filesystem::temp_directory_path() / "liftwatch_render.ppm";
  write_render_ppm(sim.truth, s.calibration.intrinsics, path, 8);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  EXPECT_EQ(magic, "P6");
  EXPECT_EQ(w, 684);
  EXPECT_EQ(h, 456);
  EXPECT_EQ(std::filesystem::file_size(path), static_cast<std::uintmax_t>(in.tellg()) + 1 + 684 * 456 * 3);
}
