#include "liftwatch/detections_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "liftwatch/errors.hpp"

namespace liftwatch {

using nlohmann::json;

namespace {

BBox read_bbox(const json& j, std::size_t line) {
  if (!j.is_array() || j.size() != 4) {
    throw SchemaError("bbox must be [u_min, v_min, u_max, v_max]", line);
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError("bbox entries must be numbers", line);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    fn(j, line);
  }
}

}  // namespace

Detection2D detection_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw SchemaError("detection line must be a JSON object", line);
  try {
    Detection2D d;
    const json& frame = j.at("frame");
    if (!frame.is_number_integer() || frame.get<long long>() < 0) {
      throw SchemaError("frame must be a non-negative integer", line);
    }
    d.frame_index = frame.get<std::size_t>();
    const json& cls = j.at("class");
    if (!cls.is_string()) throw SchemaError("class must be a string", line);
    try {
      d.object_class = class_from_string(cls.get<std::string>());
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), line);
    }
    d.bbox = read_bbox(j.at("bbox"), line);
    const json& conf = j.at("confidence");
    if (!conf.is_number()) throw SchemaError("confidence must be a number", line);
    d.confidence = conf.get<double>();
    try {
      d.validate();
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), line);
    }
    if (j.contains("track") && j.at("track").is_number_integer()) {
      d.track_id = j.at("track").get<TrackId>();
    }
    if (j.contains("predicted") && j.at("predicted").is_boolean()) {
      d.predicted = j.at("predicted").get<bool>();
    }
    return d;
  } catch (const json::out_of_range& e) {
    throw SchemaError(std::string("missing field: ") + e.what(), line);
  }
}

json to_json(const Detection2D& d) {
  json j{{"frame", d.frame_index},
         {"class", std::string(to_string(d.object_class))},
         {"bbox", {d.bbox.u_min, d.bbox.v_min, d.bbox.u_max, d.bbox.v_max}},
         {"confidence", d.confidence}};
  if (d.track_id) j["track"] = *d.track_id;
  if (d.predicted) j["predicted"] = true;
  return j;
}

DetectionsByFrame parse_detections(std::istream& in) {
  DetectionsByFrame out;
  for_each_line(in, [&out](const json& j, std::size_t line) {
    Detection2D d = detection_from_json(j, line);
    out[d.frame_index].push_back(d);
  });
  return out;
}

DetectionsByFrame load_detections_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open detections file " + path.string());
  return parse_detections(in);
}

void write_detections(std::ostream& out, const std::vector<Detection2D>& dets) {
  for (const auto& d : dets) out << to_json(d).dump() << '\n';
}

json to_json(const MaskRecord& m) {
  json rle = json::array();
  for (auto c : m.mask.to_rle()) rle.push_back(c);
  const BBox b = m.mask.bbox();
  return json{{"frame", m.frame},
              {"bbox", {static_cast<int>(b.u_min), static_cast<int>(b.v_min),
                        static_cast<int>(b.u_max), static_cast<int>(b.v_max)}},
              {"rle", rle}};
}

MaskRecord mask_from_json(const json& j, std::size_t line) {
  try {
    const BBox b = read_bbox(j.at("bbox"), line);
    const auto u0 = static_cast<int>(b.u_min);
    const auto v0 = static_cast<int>(b.v_min);
    if (b.u_min != u0 || b.v_min != v0 || b.u_max != std::floor(b.u_max) ||
        b.v_max != std::floor(b.v_max) || !(b.u_max >= b.u_min) || !(b.v_max >= b.v_min)) {
      throw SchemaError("mask bbox must be integral and ordered", line);
    }
    std::vector<std::uint32_t> counts;
    for (const auto& c : j.at("rle")) {
      if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<long long>() >= 0)) {
        throw SchemaError("rle counts must be non-negative integers", line);
      }
      counts.push_back(c.get<std::uint32_t>());
    }
    MaskRecord m;
    m.frame = j.at("frame").get<std::size_t>();
    try {
      m.mask = Mask2D::from_rle(u0, v0, static_cast<int>(b.u_max) - u0,
                                static_cast<int>(b.v_max) - v0, counts);
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), line);
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(e.what(), line);
  }
}

std::vector<MaskRecord> load_masks_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open masks file " + path.string());
  std::vector<MaskRecord> out;
  for_each_line(in, [&out](const json& j, std::size_t line) {
    out.push_back(mask_from_json(j, line));
  });
  return out;
}

}  // namespace liftwatch
