#include <gtest/gtest.h>

#include <algorithm>

#include "liftwatch/errors.hpp"
#include "liftwatch/oracle.hpp"
#include "liftwatch/pipeline.hpp"
#include "liftwatch/simulator.hpp"
#include "support.hpp"

using namespace liftwatch;
using nlohmann::json;

namespace {

json human_json(int id, double x, double y) {
  return {{"id", id},
          {"class", "human"},
          {"shape", {{"cylinder", {{"radius", 0.3}, {"height", 1.7}}}}},
          {"position", {x, y, 50.0}}};
}

// MiC with half extents (6, 2.5, 1.5), top face at z 43.5.
json mic_json(int id, double x0, double x1, std::size_t frames) {
  return {{"id", id},
          {"class", "mic"},
          {"shape", {{"box", {6.0, 2.5, 1.5}}}},
          {"waypoints",
           {{{"frame", 0}, {"position", {x0, 0.0, 45.0}}},
            {{"frame", frames - 1}, {"position", {x1, 0.0, 45.0}}}}}};
}

Scene scene_with(std::vector<json> objects, std::size_t frames, double noise_px = 0.0) {
  json j = {{"seed", 11},
            {"frames", frames},
            {"ground_z", 50.0},
            {"detector_noise_px", noise_px},
            {"lidar", {{"pattern", "grid"}, {"range_noise_sigma", 0.02}}},
            {"safety", {{"d_safe", 2.0}, {"d_collision", 5.0}, {"z_top", 50.0}}},
            {"objects", objects}};
  return scene_from_json(j);
}

PipelineConfig config_for(const Scene& s) {
  PipelineConfig c;
  c.calibration = s.calibration;
  c.safety = s.safety;
  c.oracle_noise_px = s.detector_noise_px;
  c.seed = s.seed;
  return c;
}

std::vector<FramePair> simulate_all(const Scene& s) {
  std::vector<FramePair> out;
  for (std::size_t f = 0; f < s.frames; ++f) out.push_back(frame_pair_from_simulation(simulate_frame(s, f)));
  return out;
}

// Brute-force danger decision from simulator truth: human (x, y) inside the
// MiC footprint grown by d_safe, closed.
bool truth_danger(const GroundTruthFrame& t, const SafetyConfig& cfg) {
  for (const auto& m : t.objects) {
    if (m.object_class != ObjectClass::MiC) continue;
    for (const auto& h : t.objects) {
      if (h.object_class != ObjectClass::Human) continue;
      const double hx = (*m.extent).x() + cfg.d_safe, hy = (*m.extent).y() + cfg.d_safe;
      if (std::abs(h.truth_pos.x() - m.truth_pos.x()) <= hx && std::abs(h.truth_pos.y() - m.truth_pos.y()) <= hy) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST(ProcessFrame, MiCOverHumanInsideMarginIsDanger) {
  const Scene s = scene_with({mic_json(1, 0.0, 0.0, 2), human_json(2, 0.0, 3.8), human_json(3, 0.0, 9.0)}, 1);
  const SimulatedFrame sim = simulate_frame(s, 0);
  ASSERT_TRUE(truth_danger(sim.truth, s.safety));
  TrackerState state;
  const FrameResult r = process_frame(frame_pair_from_simulation(sim), state, config_for(s));
  ASSERT_FALSE(r.skipped);
  EXPECT_EQ(r.verdict.status, SafetyStatus::Danger);
  ASSERT_EQ(r.verdict.humans_in_danger.size(), 1u);
  EXPECT_TRUE(r.failures.empty());
  ASSERT_EQ(r.localizations.size(), 3u);
  const TrackId flagged = r.verdict.humans_in_danger[0].track;
  const auto it = std::find_if(r.localizations.begin(), r.localizations.end(),
                               [&](const Localization3D& l) { return l.source_track == flagged; });
  ASSERT_NE(it, r.localizations.end());
  EXPECT_EQ(it->object_class, ObjectClass::Human);
  EXPECT_NEAR(it->position.xyz.y(), 3.8, 0.25);
  EXPECT_EQ(r.verdict.zones.size(), 1u);
}

TEST(ProcessFrame, EmptySceneIsSafe) {
  const Scene s = scene_with({}, 1);
  TrackerState state;
  const FrameResult r = process_frame(frame_pair_from_simulation(simulate_frame(s, 0)), state, config_for(s));
  EXPECT_EQ(r.verdict.status, SafetyStatus::Safe);
  EXPECT_TRUE(r.localizations.empty());
  EXPECT_TRUE(r.failures.empty());
  EXPECT_TRUE(r.detections.empty());
}

TEST(ProcessFrame, SkewSkipsAndLeavesTrackerUntouched) {
  const Scene s = scene_with({mic_json(1, 0.0, 0.0, 2)}, 2);
  const PipelineConfig cfg = config_for(s);
  TrackerState state;
  process_frame(frame_pair_from_simulation(simulate_frame(s, 0)), state, cfg);
  ASSERT_EQ(state.tracks.size(), 1u);
  const TrackState before = state.tracks[0];
  FramePair p = frame_pair_from_simulation(simulate_frame(s, 1));
  p.cloud_timestamp = p.image_timestamp + 0.06;
  const FrameResult r = process_frame(p, state, cfg);
  EXPECT_TRUE(r.skipped);
  EXPECT_NE(r.skip_reason.find("skew"), std::string::npos);
  ASSERT_EQ(state.tracks.size(), 1u);
  EXPECT_EQ(state.tracks[0].state, before.state);
  EXPECT_EQ(state.tracks[0].misses, before.misses);
  // Inside the bound the frame runs.
  p.cloud_timestamp = p.image_timestamp + 0.04;
  EXPECT_FALSE(process_frame(p, state, cfg).skipped);
}

TEST(ProcessFrame, MissingDetectionSourceIsUsageError) {
  const Scene s = scene_with({}, 1);
  FramePair p;
  TrackerState state;
  EXPECT_THROW(process_frame(p, state, config_for(s)), UsageError);
}

TEST(ProcessFrame, ConservationOfAboveThresholdDetections) {
  const Scene s = scene_with({mic_json(1, -3.0, 3.0, 10), human_json(2, 0.0, 6.0), human_json(3, 4.0, -6.0)}, 10);
  const PipelineConfig cfg = config_for(s);
  auto g = lwtest::rng(901);
  TrackerState state;
  for (FramePair p : simulate_all(s)) {
    std::vector<Detection2D> dets = oracle_detector(*p.truth, cfg.calibration.intrinsics, 0.0, cfg.seed);
    for (auto& d : dets) d.confidence = lwtest::uniform(g, 0.3, 1.0);
    p.detections = dets;
    const FrameResult r = process_frame(p, state, cfg);
    std::size_t above = 0;
    for (const auto& d : r.detections) above += passes_threshold(d.object_class, d.confidence, cfg.safety);
    EXPECT_EQ(r.localizations.size() + r.failures.size(), above);
    EXPECT_EQ(above + r.below_threshold, r.detections.size());
    for (const auto& l : r.localizations) EXPECT_TRUE(passes_threshold(l.object_class, l.confidence, cfg.safety));
    EXPECT_LE(r.timings.stage_sum(), r.timings.total);
  }
}

TEST(RunStream, OrderingError) {
  const Scene s = scene_with({}, 3);
  auto frames = simulate_all(s);
  std::swap(frames[1], frames[2]);
  EXPECT_THROW(run_stream(frames, config_for(s)), OrderingError);
  frames = simulate_all(s);
  frames[2].frame_index = 1;
  EXPECT_THROW(run_stream(frames, config_for(s)), OrderingError);
}

TEST(RunStream, SafeFramesSummary) {
  const Scene s = scene_with({human_json(1, 0.0, 0.0)}, 10);
  const StreamSummary sum = run_stream(simulate_all(s), config_for(s));
  EXPECT_EQ(sum.frames, 10u);
  EXPECT_EQ(sum.processed, 10u);
  EXPECT_EQ(sum.danger_count, 0u);
  EXPECT_EQ(sum.detections.at(ObjectClass::Human), 10u);
  EXPECT_EQ(sum.max_per_frame.at(ObjectClass::Human), 1u);
  EXPECT_LE(sum.mean_timings.stage_sum(), sum.mean_timings.total);
}

TEST(RunStream, SingleFrameSummaryEqualsVerdict) {
  const Scene s = scene_with({mic_json(1, 0.0, 0.0, 2), human_json(2, 0.0, 3.8)}, 1);
  std::vector<FrameResult> results;
  const StreamSummary sum = run_stream(simulate_all(s), config_for(s), &results);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(sum.danger_count, results[0].verdict.status == SafetyStatus::Danger ? 1u : 0u);
  EXPECT_EQ(sum.danger_count, 1u);
  EXPECT_EQ(sum.danger_frames, std::vector<std::size_t>{0});
  EXPECT_EQ(sum.localizations, results[0].localizations.size());
}

TEST(RunStream, DeterministicReports) {
  const Scene s = load_scene(LIFTWATCH_SCENES "/descent.json");
  std::vector<FrameResult> a, b;
  auto frames = simulate_all(s);
  frames.resize(15);
  const StreamSummary sa = run_stream(frames, config_for(s), &a);
  const StreamSummary sb = run_stream(frames, config_for(s), &b);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
  EXPECT_EQ(to_json(sa, false).dump(), to_json(sb, false).dump());
}

TEST(RunStream, FlyOverDangerIntervalMatchesTruth) {
  // MiC moves 1 m per frame along x; the zone reaches the human at x 0.5 from
  // frame 12.5 to 28.5, so every frame is at least 0.5 m from a boundary.
  const Scene s = scene_with({mic_json(1, -20.0, 20.0, 41), human_json(2, 0.5, 3.8)}, 41, 2.0);
  const auto frames = simulate_all(s);
  std::vector<std::size_t> expected;
  for (const auto& f : frames) {
    if (truth_danger(*f.truth, s.safety)) expected.push_back(f.frame_index);
  }
  ASSERT_EQ(expected.front(), 13u);
  ASSERT_EQ(expected.back(), 28u);
  ASSERT_EQ(expected.size(), 16u);
  const StreamSummary sum = run_stream(frames, config_for(s));
  EXPECT_EQ(sum.danger_frames, expected);
}

TEST(RunStream, SingleDropoutKeepsVerdicts) {
  const Scene s = scene_with({mic_json(1, -20.0, 20.0, 41), human_json(2, 0.5, 3.8)}, 41, 2.0);
  const PipelineConfig cfg = config_for(s);
  auto with_dets = simulate_all(s);
  for (auto& p : with_dets) p.detections = oracle_detector(*p.truth, cfg.calibration.intrinsics, cfg.oracle_noise_px, cfg.seed);
  auto dropped = with_dets;
  const std::size_t drop_at = 20;
  auto& d = *dropped[drop_at].detections;
  const auto before = d.size();
  d.erase(std::remove_if(d.begin(), d.end(), [](const Detection2D& x) { return x.object_class == ObjectClass::MiC; }), d.end());
  ASSERT_EQ(d.size() + 1, before);

  std::vector<FrameResult> ra, rb;
  run_stream(with_dets, cfg, &ra);
  run_stream(dropped, cfg, &rb);
  ASSERT_EQ(ra.size(), rb.size());
  EXPECT_EQ(ra[drop_at].verdict.status, SafetyStatus::Danger);
  const auto mic = std::find_if(rb[drop_at].detections.begin(), rb[drop_at].detections.end(),
                                [](const Detection2D& x) { return x.object_class == ObjectClass::MiC; });
  ASSERT_NE(mic, rb[drop_at].detections.end());
  EXPECT_TRUE(mic->predicted);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].verdict.status, rb[i].verdict.status) << i;
    ASSERT_EQ(ra[i].verdict.humans_in_danger.size(), rb[i].verdict.humans_in_danger.size()) << i;
    for (std::size_t h = 0; h < ra[i].verdict.humans_in_danger.size(); ++h) {
      EXPECT_EQ(ra[i].verdict.humans_in_danger[h].track, rb[i].verdict.humans_in_danger[h].track);
    }
  }
}

TEST(PipelineConfig, JsonRoundTripAndErrors) {
  const json calib = to_json(default_sim_calibration());
  const json j = {{"cluster_method", "meanshift"}, {"bandwidth", 0.3}, {"max_skew", 0.02},
                  {"safety", {{"d_safe", 3.0}, {"d_collision", 4.0}}}, {"calibration", calib}};
  const PipelineConfig c = pipeline_config_from_json(j);
  EXPECT_DOUBLE_EQ(c.max_skew, 0.02);
  EXPECT_DOUBLE_EQ(c.safety.d_safe, 3.0);
  const PipelineConfig back = pipeline_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_THROW(pipeline_config_from_json({{"safety", {{"d_safe", 2.0}}}, {"calibration", calib}}, {}, true),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json({{"cluster_method", "median"}, {"calibration", calib}}), ConfigError);
  EXPECT_THROW(pipeline_config_from_json({{"max_skew", -1.0}, {"calibration", calib}}), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(json::object()), ConfigError);
  json bad_calib = {{"calibration", to_json(default_sim_calibration())}};
  bad_calib["calibration"]["w_T_l"]["rotation"][0] = 2.0;
  EXPECT_THROW(pipeline_config_from_json(bad_calib), ConfigError);
}
