#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liftwatch/calibration.hpp"
#include "liftwatch/depth_fusion.hpp"
#include "liftwatch/perception.hpp"
#include "liftwatch/pointcloud.hpp"
#include "liftwatch/safety.hpp"
#include "liftwatch/simulator.hpp"
#include "liftwatch/tracking.hpp"

namespace liftwatch {

enum class DetectorMode { Oracle, File };

struct PipelineConfig {
  DetectorMode detector = DetectorMode::Oracle;
  FusionConfig fusion;
  PreprocessConfig preprocess;
  SafetyConfig safety = SafetyConfig::defaults();
  TrackerConfig tracker;
  Calibration calibration;
  std::string calibration_ref;  // where the calibration was loaded from
  double max_skew = 0.05;       // seconds between image and cloud timestamps
  double oracle_noise_px = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Keys: "detector", "cluster_method", "k", "bandwidth", "theta_max",
/// "max_pixels", "preprocess", "safety", "tracker", "calibration" (a path,
/// relative to `base_dir`, or an inline object), "max_skew",
/// "oracle_noise_px", "seed". `require_distances` makes safety.d_safe and
/// safety.d_collision mandatory.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {},
                                         bool require_distances = false);
nlohmann::json to_json(const PipelineConfig& c);

/// One synchronized image/cloud pair. Detections come from `detections` when
/// set, otherwise from the oracle detector over `truth`. `truth`, when present,
/// also backs the segmenter.
struct FramePair {
  std::size_t frame_index = 0;
  double image_timestamp = 0.0;
  double cloud_timestamp = 0.0;
  PointCloud cloud;
  std::optional<GroundTruthFrame> truth;
  std::optional<std::vector<Detection2D>> detections;
};

/// Milliseconds.
struct StageTimings {
  double detect = 0.0;
  double associate = 0.0;
  double segment = 0.0;
  double preprocess = 0.0;
  double index = 0.0;
  double localize = 0.0;
  double assess = 0.0;
  double total = 0.0;

  double stage_sum() const {
    return detect + associate + segment + preprocess + index + localize + assess;
  }
};

struct FrameResult {
  std::size_t frame_index = 0;
  bool skipped = false;
  std::string skip_reason;
  SafetyVerdict verdict;
  std::vector<Detection2D> detections;  // after association, with track ids
  std::vector<Localization3D> localizations;
  std::vector<FusionFailure> failures;
  std::size_t below_threshold = 0;
  StageTimings timings;
};

/// Stages run in a fixed order: detect, associate and fill, segment (MiC and
/// MiC frames only), preprocess, index, localize, assess. Detections below
/// their class threshold are tracked but not localized. A skew above
/// cfg.max_skew skips the frame and leaves the tracker untouched.
FrameResult process_frame(const FramePair& pair, TrackerState& state,
                          const PipelineConfig& cfg);

struct StreamSummary {
  std::size_t frames = 0;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t danger_count = 0;
  std::vector<std::size_t> danger_frames;
  std::map<ObjectClass, std::size_t> detections;     // above threshold, all frames
  std::map<ObjectClass, std::size_t> max_per_frame;  // above threshold
  std::size_t localizations = 0;
  std::size_t fusion_failures = 0;
  StageTimings mean_timings;
};

/// Threads tracker state through the frames. `next` yields pairs until it
/// returns none; indices must strictly increase (OrderingError otherwise).
/// Each result is handed to `sink` as soon as it is ready.
StreamSummary run_stream(const std::function<std::optional<FramePair>()>& next,
                         const PipelineConfig& cfg,
                         const std::function<void(const FrameResult&)>& sink);

StreamSummary run_stream(std::vector<FramePair> frames, const PipelineConfig& cfg,
                         std::vector<FrameResult>* results = nullptr);

/// Deterministic report line: verdict, localizations and failures; no timings.
nlohmann::json to_json(const FrameResult& r);
nlohmann::json to_json(const StreamSummary& s, bool with_timings = true);
nlohmann::json to_json(const Localization3D& l);

/// Frame pairs for a simulated scene, truth attached.
FramePair frame_pair_from_simulation(const SimulatedFrame& sim);

}  // namespace liftwatch
