#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "liftwatch/calibration.hpp"
#include "liftwatch/detections_io.hpp"
#include "liftwatch/errors.hpp"
#include "liftwatch/eval.hpp"
#include "liftwatch/overlay.hpp"
#include "liftwatch/pipeline.hpp"
#include "liftwatch/pointcloud.hpp"
#include "liftwatch/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace liftwatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::string frame_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu%s", i, ext);
  return buf;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::string out;
  bool render = false;
  std::string format = "bin";
};

int cmd_simulate(const SimulateArgs& a) {
  const Scene scene = load_scene(a.scene);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  save_calibration(scene.calibration, dir / "calib.json");
  open_out(dir / "scene.json") << to_json(scene).dump(2) << "\n";
  std::ofstream frames = open_out(dir / "frames.jsonl");
  std::ofstream truth = open_out(dir / "ground_truth.jsonl");
  const char* ext = a.format == "csv" ? ".csv" : ".bin";
  std::size_t written = 0;
  for (std::size_t f = 0; f < scene.frames; ++f) {
    SimulatedFrame sim;
    try {
      sim = simulate_frame(scene, f);
    } catch (const EndOfScenario& e) {
      std::cerr << "simulate: " << e.what() << "; stopping\n";
      break;
    }
    const std::string cloud_name = frame_name(f, ext);
    if (a.format == "csv") {
      write_cloud_csv(sim.cloud, dir / cloud_name);
    } else {
      write_cloud_binary(sim.cloud, dir / cloud_name);
    }
    frames << json{{"frame", f},
                   {"image_timestamp", sim.timestamp},
                   {"cloud_timestamp", sim.cloud.timestamp},
                   {"cloud", cloud_name}}
                  .dump()
           << "\n";
    for (const ObjectTruth& t : sim.truth.objects) {
      if (t.visible) truth << to_json(t, f).dump() << "\n";
    }
    if (a.render) write_render_ppm(sim.truth, scene.calibration.intrinsics, dir / frame_name(f, ".ppm"));
    ++written;
  }
  std::cout << json{{"frames", written}, {"out", dir.string()}}.dump() << "\n";
  return kExitOk;
}

// run -------------------------------------------------------------------

struct RunArgs {
  std::string frames;
  std::string config;
  std::string detections = "oracle";
  std::string report;
  std::string overlays;
  std::string summary;
  bool ppm = false;
};

struct FrameEntry {
  std::size_t frame = 0;
  double image_timestamp = 0.0;
  double cloud_timestamp = 0.0;
  fs::path cloud;
};

std::vector<FrameEntry> load_frame_index(const fs::path& dir) {
  const fs::path path = dir / "frames.jsonl";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<FrameEntry> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      FrameEntry e;
      e.frame = j.at("frame").get<std::size_t>();
      e.image_timestamp = j.at("image_timestamp").get<double>();
      e.cloud_timestamp = j.at("cloud_timestamp").get<double>();
      e.cloud = dir / j.at("cloud").get<std::string>();
      out.push_back(e);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  return out;
}

int cmd_run(const RunArgs& a) {
  const fs::path dir = a.frames;
  const fs::path cfg_path = a.config;
  json cfg_json = read_json_file(cfg_path);
  if (!cfg_json.contains("calibration")) cfg_json["calibration"] = fs::absolute(dir / "calib.json").string();
  cfg_json["detector"] = a.detections == "oracle" ? "oracle" : "file";
  const PipelineConfig cfg = pipeline_config_from_json(cfg_json, cfg_path.parent_path(), true);

  std::map<std::size_t, std::vector<ObjectTruth>> truth;
  if (fs::exists(dir / "ground_truth.jsonl")) truth = load_ground_truth(dir / "ground_truth.jsonl");
  DetectionsByFrame file_dets;
  const bool oracle = cfg.detector == DetectorMode::Oracle;
  if (oracle) {
    if (!fs::exists(dir / "ground_truth.jsonl")) {
      throw ConfigError("oracle detections need " + (dir / "ground_truth.jsonl").string());
    }
  } else {
    file_dets = load_detections_file(a.detections);
  }
  const std::vector<FrameEntry> entries = load_frame_index(dir);

  std::ofstream report = open_out(a.report);
  if (!a.overlays.empty()) fs::create_directories(a.overlays);
  std::size_t next = 0;
  const auto source = [&]() -> std::optional<FramePair> {
    if (next == entries.size()) return std::nullopt;
    const FrameEntry& e = entries[next++];
    FramePair p;
    p.frame_index = e.frame;
    p.image_timestamp = e.image_timestamp;
    p.cloud_timestamp = e.cloud_timestamp;
    p.cloud = read_cloud(e.cloud);
    p.cloud.timestamp = e.cloud_timestamp;
    GroundTruthFrame gt;
    gt.frame_index = e.frame;
    gt.timestamp = e.image_timestamp;
    if (auto it = truth.find(e.frame); it != truth.end()) gt.objects = it->second;
    if (!truth.empty()) p.truth = std::move(gt);
    if (!oracle) {
      auto it = file_dets.find(e.frame);
      p.detections = it == file_dets.end() ? std::vector<Detection2D>{} : it->second;
    }
    return p;
  };
  const auto sink = [&](const FrameResult& r) {
    report << to_json(r).dump() << "\n";
    if (r.skipped) {
      std::cerr << "run: skipped frame " << r.frame_index << ": " << r.skip_reason << "\n";
      return;
    }
    if (!a.overlays.empty()) {
      const Overlay ov = render_overlay(r.verdict, r.localizations, cfg.calibration);
      for (const auto& note : ov.notes) std::cerr << "overlay frame " << r.frame_index << ": " << note << "\n";
      write_svg(ov, fs::path(a.overlays) / frame_name(r.frame_index, ".svg"));
      if (a.ppm) write_ppm(ov, fs::path(a.overlays) / frame_name(r.frame_index, ".ppm"));
    }
  };
  const StreamSummary s = run_stream(source, cfg, sink);
  const json summary = to_json(s);
  if (!a.summary.empty()) open_out(a.summary) << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// eval-detections -------------------------------------------------------

std::vector<Detection2D> flatten(const DetectionsByFrame& by_frame) {
  std::vector<Detection2D> out;
  for (const auto& [frame, dets] : by_frame) out.insert(out.end(), dets.begin(), dets.end());
  return out;
}

int cmd_eval_detections(const std::string& pred, const std::string& gt, const std::string& out) {
  const auto preds = flatten(load_detections_file(pred));
  const auto gts = flatten(load_detections_file(gt));
  if (gts.empty()) throw NoDataError("ground truth file has no detections");
  const json report = to_json(map_suite(preds, gts));
  open_out(out) << report.dump(2) << "\n";
  std::cout << json{{"mAP50", report.at("mAP50")}, {"mAP50_95", report.at("mAP50_95")}}.dump()
            << "\n";
  return kExitOk;
}

// eval-depth ------------------------------------------------------------

struct EvalDepthArgs {
  std::string scene;
  std::string methods = "mean,kmeans,meanshift";
  std::string out;
  bool bbox_only = false;
  std::size_t max_frames = 0;
  bool samples = false;
};

int cmd_eval_depth(const EvalDepthArgs& a) {
  const Scene scene = load_scene(a.scene);
  std::vector<ClusterMethod> methods;
  std::stringstream ss(a.methods);
  for (std::string name; std::getline(ss, name, ',');) {
    if (!name.empty()) methods.push_back(parse_cluster_method(name));
  }
  if (methods.empty()) throw ConfigError("--methods lists no method");
  SceneBenchmarkOptions opts;
  opts.use_masks = !a.bbox_only;
  opts.max_frames = a.max_frames;
  const json report = to_json(clustering_benchmark(scene, methods, opts), a.samples);
  open_out(a.out) << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// check-calibration -----------------------------------------------------

int cmd_check_calibration(const std::string& calib, const std::string& pairs) {
  const json j = read_json_file(calib);
  const CalibrationCheck c = check_calibration(j);
  json out = {{"valid", c.valid},
              {"problems", c.problems},
              {"l_T_c", {{"orthonormality", c.l_T_c_orthonormality},
                         {"determinant", c.l_T_c_determinant}}},
              {"w_T_l", {{"orthonormality", c.w_T_l_orthonormality},
                         {"determinant", c.w_T_l_determinant},
                         {"translation_norm", c.w_T_l_translation_norm}}}};
  if (c.valid && !pairs.empty()) {
    const Calibration cal = calibration_from_json(j);
    const auto corr = load_correspondences(fs::path(pairs) / "correspondences.jsonl");
    const ResidualReport r = reprojection_residuals(cal, corr);
    out["residuals"] = {{"count", r.count}, {"behind_camera", r.behind_camera},
                        {"mean_px", r.mean}, {"rms_px", r.rms}, {"max_px", r.max}};
  }
  std::cout << out.dump(2) << "\n";
  return c.valid ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-LiDAR fusion and safety monitoring for crane lifts"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate frame pairs and ground truth from a scene");
  simulate->add_option("--scene", sim.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_flag("--render", sim.render, "Also write flat-shaded PPM renders");
  simulate->add_option("--format", sim.format, "Point cloud format")
      ->check(CLI::IsMember({"bin", "csv"}));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline over a frame directory");
  run_cmd->add_option("--frames", run.frames, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--config", run.config, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--detections", run.detections, "'oracle' or a detections JSONL file");
  run_cmd->add_option("--report", run.report, "Verdict JSONL output")->required();
  run_cmd->add_option("--overlays", run.overlays, "Directory for SVG overlays");
  run_cmd->add_option("--summary", run.summary, "Summary JSON output");
  run_cmd->add_flag("--ppm", run.ppm, "Also write PPM overlays");

  std::string pred, gt, eval_out;
  auto* eval_det = app.add_subcommand("eval-detections", "Detection metrics (AP, mAP50, mAP50-95)");
  eval_det->add_option("--pred", pred, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  eval_det->add_option("--gt", gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  eval_det->add_option("--out", eval_out, "Report JSON")->required();

  EvalDepthArgs depth;
  auto* eval_depth = app.add_subcommand("eval-depth", "Compare depth clustering methods on a scene");
  eval_depth->add_option("--scene", depth.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  eval_depth->add_option("--methods", depth.methods, "Comma-separated: mean,kmeans,meanshift");
  eval_depth->add_option("--out", depth.out, "Report JSON")->required();
  eval_depth->add_flag("--bbox-only", depth.bbox_only, "Use box pixels for every class");
  eval_depth->add_option("--max-frames", depth.max_frames, "Limit the number of frames");
  eval_depth->add_flag("--samples", depth.samples, "Include per-object errors");

  std::string calib, pairs;
  auto* check = app.add_subcommand("check-calibration", "Validate a calibration file");
  check->add_option("--calib", calib, "Calibration JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--pairs", pairs, "Directory with correspondences.jsonl")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*run_cmd) return cmd_run(run);
    if (*eval_det) return cmd_eval_detections(pred, gt, eval_out);
    if (*eval_depth) return cmd_eval_depth(depth);
    if (*check) return cmd_check_calibration(calib, pairs);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NoDataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const OrderingError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "internal invariant violated: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
