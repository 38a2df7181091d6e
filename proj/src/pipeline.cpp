#include "liftwatch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <variant>

#include "liftwatch/errors.hpp"
#include "liftwatch/oracle.hpp"

namespace liftwatch {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json bbox_json(const BBox& b) { return json::array({b.u_min, b.v_min, b.u_max, b.v_max}); }

TrackerConfig tracker_from_json(const json& j) {
  TrackerConfig t;
  t.q_position = j.value("q_position", t.q_position);
  t.q_velocity = j.value("q_velocity", t.q_velocity);
  t.r_measurement = j.value("r_measurement", t.r_measurement);
  t.initial_velocity_var = j.value("initial_velocity_var", t.initial_velocity_var);
  t.gate_iou = j.value("gate_iou", t.gate_iou);
  t.max_misses = j.value("max_misses", t.max_misses);
  t.smooth_matched = j.value("smooth_matched", t.smooth_matched);
  return t;
}

}  // namespace

void PipelineConfig::validate() const {
  fusion.validate();
  preprocess.validate();
  safety.validate();
  tracker.validate();
  try {
    calibration.intrinsics.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
  if (!(max_skew >= 0.0)) throw ConfigError("max_skew must be >= 0");
  if (!(oracle_noise_px >= 0.0)) throw ConfigError("oracle_noise_px must be >= 0");
}

PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base_dir,
                                         bool require_distances) {
  PipelineConfig c;
  try {
    const std::string det = j.value("detector", std::string("oracle"));
    if (det == "oracle") {
      c.detector = DetectorMode::Oracle;
    } else if (det == "file") {
      c.detector = DetectorMode::File;
    } else {
      throw ConfigError("detector must be oracle or file");
    }
    if (j.contains("cluster_method")) {
      c.fusion.method = parse_cluster_method(j.at("cluster_method").get<std::string>());
    }
    c.fusion.method.k = j.value("k", c.fusion.method.k);
    c.fusion.method.bandwidth = j.value("bandwidth", c.fusion.method.bandwidth);
    c.fusion.theta_max = j.value("theta_max", c.fusion.theta_max);
    c.fusion.max_pixels = j.value("max_pixels", c.fusion.max_pixels);
    if (j.contains("preprocess")) {
      const json& p = j.at("preprocess");
      c.preprocess.zero_epsilon = p.value("zero_epsilon", c.preprocess.zero_epsilon);
      c.preprocess.voxel_leaf = p.value("voxel_leaf", c.preprocess.voxel_leaf);
    }
    if (j.contains("safety")) {
      c.safety = safety_from_json(j.at("safety"), require_distances);
    } else if (require_distances) {
      throw ConfigError("safety.d_safe and safety.d_collision must be set explicitly");
    }
    if (j.contains("tracker")) c.tracker = tracker_from_json(j.at("tracker"));
    if (j.contains("calibration")) {
      const json& cal = j.at("calibration");
      if (cal.is_string()) {
        std::filesystem::path p = cal.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        c.calibration = load_calibration(p);
        c.calibration_ref = p.string();
      } else {
        c.calibration = calibration_from_json(cal);
        c.calibration_ref = "inline";
      }
    }
    c.max_skew = j.value("max_skew", c.max_skew);
    c.oracle_noise_px = j.value("oracle_noise_px", c.oracle_noise_px);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  return json{{"detector", c.detector == DetectorMode::Oracle ? "oracle" : "file"},
              {"cluster_method", to_string(c.fusion.method)},
              {"k", c.fusion.method.k},
              {"bandwidth", c.fusion.method.bandwidth},
              {"theta_max", c.fusion.theta_max},
              {"max_pixels", c.fusion.max_pixels},
              {"preprocess",
               {{"zero_epsilon", c.preprocess.zero_epsilon},
                {"voxel_leaf", c.preprocess.voxel_leaf}}},
              {"safety", to_json(c.safety)},
              {"tracker",
               {{"q_position", c.tracker.q_position},
                {"q_velocity", c.tracker.q_velocity},
                {"r_measurement", c.tracker.r_measurement},
                {"initial_velocity_var", c.tracker.initial_velocity_var},
                {"gate_iou", c.tracker.gate_iou},
                {"max_misses", c.tracker.max_misses},
                {"smooth_matched", c.tracker.smooth_matched}}},
              {"calibration", to_json(c.calibration)},
              {"max_skew", c.max_skew},
              {"oracle_noise_px", c.oracle_noise_px},
              {"seed", c.seed}};
}

FrameResult process_frame(const FramePair& pair, TrackerState& state,
                          const PipelineConfig& cfg) {
  const auto t_frame = Clock::now();
  FrameResult r;
  r.frame_index = pair.frame_index;
  r.verdict.frame_index = pair.frame_index;
  const double skew = std::abs(pair.image_timestamp - pair.cloud_timestamp);
  if (skew > cfg.max_skew) {
    r.skipped = true;
    r.skip_reason = "timestamp skew " + std::to_string(skew) + " s exceeds " +
                    std::to_string(cfg.max_skew) + " s";
    r.timings.total = ms_since(t_frame);
    return r;
  }
  const CameraIntrinsics& k = cfg.calibration.intrinsics;
  const ExtrinsicSet& e = cfg.calibration.extrinsics;

  auto t0 = Clock::now();
  std::vector<Detection2D> raw;
  if (pair.detections) {
    raw = *pair.detections;
  } else if (pair.truth) {
    raw = oracle_detector(*pair.truth, k, cfg.oracle_noise_px, cfg.seed);
  } else {
    throw UsageError("frame " + std::to_string(pair.frame_index) +
                     " has neither detections nor ground truth");
  }
  for (auto& d : raw) {
    d.frame_index = pair.frame_index;
    d.validate();
  }
  r.timings.detect = ms_since(t0);

  t0 = Clock::now();
  AssociationResult assoc = associate_and_fill(state, raw, cfg.tracker, pair.frame_index);
  r.detections = std::move(assoc.detections);
  r.timings.associate = ms_since(t0);

  t0 = Clock::now();
  std::vector<const Detection2D*> active;
  std::vector<std::optional<Mask2D>> masks;
  for (const Detection2D& d : r.detections) {
    if (!passes_threshold(d.object_class, d.confidence, cfg.safety)) {
      ++r.below_threshold;
      continue;
    }
    active.push_back(&d);
    std::optional<Mask2D> mask;
    if (d.object_class != ObjectClass::Human) {
      if (pair.truth) {
        if (const ObjectTruth* t = match_truth(*pair.truth, d.object_class, d.bbox)) {
          mask = oracle_segmenter(*t, d.bbox);
        }
      }
      if (!mask && d.bbox.valid()) {
        Mask2D fill = Mask2D::filled(d.bbox);
        if (!fill.empty()) mask = std::move(fill);
      }
    }
    masks.push_back(std::move(mask));
  }
  r.timings.segment = ms_since(t0);

  t0 = Clock::now();
  const PointCloud cloud = preprocess(pair.cloud, cfg.preprocess);
  r.timings.preprocess = ms_since(t0);

  t0 = Clock::now();
  const AngularIndex index = make_fusion_index(cloud, e, cfg.fusion.theta_max);
  r.timings.index = ms_since(t0);

  t0 = Clock::now();
  for (std::size_t i = 0; i < active.size(); ++i) {
    const Mask2D* mask = masks[i] ? &*masks[i] : nullptr;
    LocalizeResult lr = localize_object(*active[i], mask, index, k, e, cfg.fusion);
    if (auto* loc = std::get_if<Localization3D>(&lr)) {
      r.localizations.push_back(std::move(*loc));
    } else {
      r.failures.push_back(std::move(std::get<FusionFailure>(lr)));
    }
  }
  r.timings.localize = ms_since(t0);

  t0 = Clock::now();
  r.verdict = assess_frame(pair.frame_index, r.localizations, r.failures, cfg.safety);
  r.timings.assess = ms_since(t0);
  r.timings.total = ms_since(t_frame);
  return r;
}

StreamSummary run_stream(const std::function<std::optional<FramePair>()>& next,
                         const PipelineConfig& cfg,
                         const std::function<void(const FrameResult&)>& sink) {
  cfg.validate();
  TrackerState state;
  StreamSummary s;
  std::optional<std::size_t> last;
  StageTimings sum;
  while (auto pair = next()) {
    if (last && pair->frame_index <= *last) {
      throw OrderingError("frame " + std::to_string(pair->frame_index) + " arrived after frame " +
                          std::to_string(*last));
    }
    last = pair->frame_index;
    FrameResult r = process_frame(*pair, state, cfg);
    ++s.frames;
    if (r.skipped) {
      ++s.skipped;
    } else {
      ++s.processed;
      if (r.verdict.status == SafetyStatus::Danger) {
        ++s.danger_count;
        s.danger_frames.push_back(r.frame_index);
      }
      std::map<ObjectClass, std::size_t> per_frame;
      for (const auto& l : r.localizations) per_frame[l.object_class]++;
      for (const auto& f : r.failures) per_frame[f.object_class]++;
      for (const auto& [cls, n] : per_frame) {
        s.detections[cls] += n;
        s.max_per_frame[cls] = std::max(s.max_per_frame[cls], n);
      }
      s.localizations += r.localizations.size();
      s.fusion_failures += r.failures.size();
      sum.detect += r.timings.detect;
      sum.associate += r.timings.associate;
      sum.segment += r.timings.segment;
      sum.preprocess += r.timings.preprocess;
      sum.index += r.timings.index;
      sum.localize += r.timings.localize;
      sum.assess += r.timings.assess;
      sum.total += r.timings.total;
    }
    sink(r);
  }
  if (s.processed > 0) {
    const double n = static_cast<double>(s.processed);
    s.mean_timings = {sum.detect / n,     sum.associate / n, sum.segment / n,
                      sum.preprocess / n, sum.index / n,     sum.localize / n,
                      sum.assess / n,     sum.total / n};
  }
  return s;
}

StreamSummary run_stream(std::vector<FramePair> frames, const PipelineConfig& cfg,
                         std::vector<FrameResult>* results) {
  std::size_t i = 0;
  return run_stream(
      [&]() -> std::optional<FramePair> {
        if (i == frames.size()) return std::nullopt;
        return std::move(frames[i++]);
      },
      cfg,
      [results](const FrameResult& r) {
        if (results) results->push_back(r);
      });
}

json to_json(const Localization3D& l) {
  json j = {{"track", l.source_track},
            {"class", to_string(l.object_class)},
            {"position", vec3_json(l.position.xyz)},
            {"confidence", l.confidence},
            {"bbox", bbox_json(l.bbox)},
            {"anchor_pixel", {l.anchor_pixel.u, l.anchor_pixel.v}},
            {"z_c", l.z_c},
            {"z_l_prime", l.z_l_prime},
            {"candidates", l.candidate_count},
            {"predicted", l.predicted}};
  if (l.extent) j["extent"] = vec3_json(*l.extent);
  return j;
}

json to_json(const FrameResult& r) {
  if (r.skipped) {
    return json{{"frame", r.frame_index}, {"skipped", true}, {"reason", r.skip_reason}};
  }
  json j = to_json(r.verdict);
  j["skipped"] = false;
  json locs = json::array();
  for (const auto& l : r.localizations) locs.push_back(to_json(l));
  j["localizations"] = locs;
  json fails = json::array();
  for (const auto& f : r.failures) {
    fails.push_back({{"track", f.track},
                     {"class", to_string(f.object_class)},
                     {"bbox", bbox_json(f.bbox)},
                     {"reason", f.reason}});
  }
  j["failures"] = fails;
  j["below_threshold"] = r.below_threshold;
  return j;
}

json to_json(const StreamSummary& s, bool with_timings) {
  json det = json::object();
  json peak = json::object();
  for (ObjectClass c : kAllClasses) {
    const std::string name(to_string(c));
    det[name] = s.detections.count(c) ? s.detections.at(c) : 0;
    peak[name] = s.max_per_frame.count(c) ? s.max_per_frame.at(c) : 0;
  }
  json j = {{"frames", s.frames},
            {"processed", s.processed},
            {"skipped", s.skipped},
            {"danger_count", s.danger_count},
            {"danger_frames", s.danger_frames},
            {"detections", det},
            {"max_per_frame", peak},
            {"localizations", s.localizations},
            {"fusion_failures", s.fusion_failures}};
  if (with_timings) {
    const StageTimings& t = s.mean_timings;
    j["mean_stage_ms"] = {{"detect", t.detect},         {"associate", t.associate},
                          {"segment", t.segment},       {"preprocess", t.preprocess},
                          {"index", t.index},           {"localize", t.localize},
                          {"assess", t.assess},         {"total", t.total}};
  }
  return j;
}

FramePair frame_pair_from_simulation(const SimulatedFrame& sim) {
  FramePair p;
  p.frame_index = sim.frame_index;
  p.image_timestamp = sim.timestamp;
  p.cloud_timestamp = sim.cloud.timestamp;
  p.cloud = sim.cloud;
  p.truth = sim.truth;
  return p;
}

}  // namespace liftwatch
