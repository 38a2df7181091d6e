#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <map>
#include <vector>

#include "liftwatch/perception.hpp"

namespace liftwatch {

/// Detections keyed by frame; within a frame, file order is kept.
using DetectionsByFrame = std::map<std::size_t, std::vector<Detection2D>>;

/// One JSONL object: {"frame": n, "class": "human|mic|mic_frame",
/// "bbox": [u_min, v_min, u_max, v_max], "confidence": c}. Extra keys are
/// ignored. Throws SchemaError (with `line`) on bad values.
Detection2D detection_from_json(const nlohmann::json& j, std::size_t line = 0);
nlohmann::json to_json(const Detection2D& d);

/// Throws ParseError with the line number for malformed JSON, SchemaError
/// for schema violations. Confidence thresholds are not applied.
DetectionsByFrame load_detections_file(const std::filesystem::path& path);
DetectionsByFrame parse_detections(std::istream& in);

void write_detections(std::ostream& out, const std::vector<Detection2D>& dets);

struct MaskRecord {
  std::size_t frame = 0;
  Mask2D mask{0, 0, 0, 0};
};

/// {"frame": n, "bbox": [u0, v0, u0+width, v0+height], "rle": [...]}, runs
/// row-major within the box, starting with zeros.
nlohmann::json to_json(const MaskRecord& m);
MaskRecord mask_from_json(const nlohmann::json& j, std::size_t line = 0);
std::vector<MaskRecord> load_masks_file(const std::filesystem::path& path);

}  // namespace liftwatch
