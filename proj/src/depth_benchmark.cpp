#include <variant>

#include "liftwatch/depth_fusion.hpp"
#include "liftwatch/eval.hpp"
#include "liftwatch/oracle.hpp"
#include "liftwatch/simulator.hpp"

namespace liftwatch {

namespace {

void finish(MethodError& m) {
  double sum = 0.0;
  for (double e : m.errors) sum += e;
  m.evaluated = m.errors.size();
  m.mean_err = m.errors.empty() ? 0.0 : sum / static_cast<double>(m.errors.size());
}

}  // namespace

DepthErrReport clustering_benchmark(std::span<const ClusterMethod> methods,
                                    const ContaminationSpec& spec, std::size_t runs,
                                    std::uint64_t seed) {
  for (const auto& m : methods) m.validate();
  const Calibration calib = default_sim_calibration();
  const CameraIntrinsics& k = calib.intrinsics;
  const ExtrinsicSet& e = calib.extrinsics;
  const PixelPoint anchor{-k.c_x / k.f_x, -k.c_y / k.f_y};
  const Point3 truth = lift_pixel(k, e, anchor, solve_z_c(k, e.l_T_c(), anchor, spec.true_depth));

  DepthErrReport report;
  for (const auto& m : methods) report.methods.push_back({to_string(m), 0.0, 0, 0, {}});
  for (std::size_t run = 0; run < runs; ++run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 rng(seq);
    const std::vector<double> values = contaminated_candidates(spec, rng);
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const double z = select_object_depth(cluster_1d(values, methods[i]));
      const Point3 p = lift_pixel(k, e, anchor, solve_z_c(k, e.l_T_c(), anchor, z));
      report.methods[i].errors.push_back(distance_err(p, truth));
    }
  }
  for (auto& m : report.methods) finish(m);
  return report;
}

DepthErrReport clustering_benchmark(const Scene& scene,
                                    std::span<const ClusterMethod> methods,
                                    const SceneBenchmarkOptions& opts) {
  for (const auto& m : methods) m.validate();
  DepthErrReport report;
  for (const auto& m : methods) report.methods.push_back({to_string(m), 0.0, 0, 0, {}});
  const CameraIntrinsics& k = scene.calibration.intrinsics;
  const ExtrinsicSet& e = scene.calibration.extrinsics;
  const PreprocessConfig pre;
  const std::size_t frames =
      opts.max_frames == 0 ? scene.frames : std::min(scene.frames, opts.max_frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const SimulatedFrame sim = simulate_frame(scene, f);
    const PointCloud cloud = preprocess(sim.cloud, pre);
    const auto dets = oracle_detector(sim.truth, k, scene.detector_noise_px, scene.seed);
    FusionConfig base;
    const AngularIndex index = make_fusion_index(cloud, e, base.theta_max);
    for (const Detection2D& d : dets) {
      const ObjectTruth* t = match_truth(sim.truth, d.object_class, d.bbox);
      if (t == nullptr) continue;
      std::optional<Mask2D> mask;
      if (opts.use_masks && d.object_class != ObjectClass::Human) {
        mask = oracle_segmenter(*t, d.bbox);
      }
      const Point3 truth{t->truth_pos, Frame::World};
      for (std::size_t i = 0; i < methods.size(); ++i) {
        FusionConfig cfg = base;
        cfg.method = methods[i];
        const LocalizeResult r =
            localize_object(d, mask ? &*mask : nullptr, index, k, e, cfg);
        if (const auto* loc = std::get_if<Localization3D>(&r)) {
          report.methods[i].errors.push_back(distance_err(loc->position, truth));
        } else {
          report.methods[i].failures++;
        }
      }
    }
  }
  for (auto& m : report.methods) finish(m);
  return report;
}

}  // namespace liftwatch
