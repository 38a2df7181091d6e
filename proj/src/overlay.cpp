#include "liftwatch/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "liftwatch/errors.hpp"

namespace liftwatch {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string object_label(const Localization3D& loc) {
  return std::string(to_string(loc.object_class)) + " #" + std::to_string(loc.source_track);
}

}  // namespace

std::string_view to_hex(OverlayColor c) {
  return c == OverlayColor::Red ? "#d50000" : "#00c853";
}

Overlay render_overlay(const SafetyVerdict& verdict,
                       std::span<const Localization3D> localizations,
                       const Calibration& calib) {
  const CameraIntrinsics& k = calib.intrinsics;
  const bool danger = verdict.status == SafetyStatus::Danger;
  Overlay ov;
  ov.frame_index = verdict.frame_index;
  ov.width = k.width;
  ov.height = k.height;

  std::set<TrackId> red_humans, red_frames, red_mics;
  for (const auto& h : verdict.humans_in_danger) red_humans.insert(h.track);
  for (const auto& c : verdict.collisions) {
    red_frames.insert(c.a);
    red_frames.insert(c.b);
  }

  for (const DangerZone& zone : verdict.zones) {
    bool hot = false;
    if (danger) {
      for (const auto& h : verdict.humans_in_danger) {
        if (point_in_convex_polygon(zone.footprint, h.position.xyz.head<2>())) hot = true;
      }
    }
    if (hot) red_mics.insert(zone.source_object);
    Polygon2 projected;
    bool behind = false;
    for (const auto& v : zone.footprint) {
      try {
        const Reprojection r = reproject_world_to_pixel(
            k, calib.extrinsics, {Eigen::Vector3d(v.x(), v.y(), zone.z), Frame::World});
        projected.emplace_back(r.pixel.u, r.pixel.v);
      } catch (const BehindCameraError&) {
        behind = true;
        break;
      }
    }
    const std::string name = "zone of mic #" + std::to_string(zone.source_object);
    if (behind) {
      ov.notes.push_back(name + " omitted: behind the camera");
      continue;
    }
    Polygon2 clipped = clip_to_rect(projected, 0.0, 0.0, k.width - 1.0, k.height - 1.0);
    if (clipped.size() < 3) {
      ov.notes.push_back(name + " omitted: outside the image");
      continue;
    }
    ov.polygons.push_back({std::move(clipped), hot ? OverlayColor::Red : OverlayColor::Green, name});
  }

  for (const Localization3D& loc : localizations) {
    bool red = false;
    if (danger) {
      switch (loc.object_class) {
        case ObjectClass::Human: red = red_humans.count(loc.source_track) > 0; break;
        case ObjectClass::MiC: red = red_mics.count(loc.source_track) > 0; break;
        case ObjectClass::MiCFrame: red = red_frames.count(loc.source_track) > 0; break;
      }
    }
    ov.rects.push_back({loc.bbox, red ? OverlayColor::Red : OverlayColor::Green, object_label(loc)});
  }

  ov.labels.push_back({{16.0, 48.0},
                       std::string(danger ? "DANGER" : "SAFE") + " frame " +
                           std::to_string(verdict.frame_index),
                       danger ? OverlayColor::Red : OverlayColor::Green});
  for (const auto& c : verdict.collisions) {
    std::ostringstream text;
    text.precision(3);
    text << "frames #" << c.a << "/#" << c.b << " gap " << c.distance << " m";
    ov.labels.push_back({{16.0, 48.0 * (1.0 + static_cast<double>(ov.labels.size()))},
                         text.str(), OverlayColor::Red});
  }
  return ov;
}

std::string to_svg(const Overlay& ov) {
  std::ostringstream s;
  s.precision(10);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << ov.width << "\" height=\""
    << ov.height << "\" viewBox=\"0 0 " << ov.width << " " << ov.height << "\">\n";
  for (const auto& p : ov.polygons) {
    s << "  <polygon points=\"";
    for (std::size_t i = 0; i < p.vertices.size(); ++i) {
      s << (i ? " " : "") << p.vertices[i].x() << "," << p.vertices[i].y();
    }
    s << "\" fill=\"" << to_hex(p.color) << "\" fill-opacity=\"0.35\" stroke=\""
      << to_hex(p.color) << "\" stroke-width=\"4\"><title>" << xml_escape(p.label)
      << "</title></polygon>\n";
  }
  for (const auto& r : ov.rects) {
    s << "  <rect x=\"" << r.box.u_min << "\" y=\"" << r.box.v_min << "\" width=\""
      << r.box.width() << "\" height=\"" << r.box.height() << "\" fill=\"" << to_hex(r.color)
      << "\" fill-opacity=\"0.15\" stroke=\"" << to_hex(r.color)
      << "\" stroke-width=\"4\"><title>" << xml_escape(r.label) << "</title></rect>\n";
  }
  for (const auto& l : ov.labels) {
    s << "  <text x=\"" << l.at.u << "\" y=\"" << l.at.v << "\" font-size=\"40\" fill=\""
      << to_hex(l.color) << "\">" << xml_escape(l.text) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_svg(const Overlay& ov, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_svg(ov);
}

void write_ppm(const Overlay& ov, const std::filesystem::path& path, int downscale) {
  if (downscale < 1) throw UsageError("write_ppm: downscale must be >= 1");
  const int w = std::max(1, ov.width / downscale);
  const int h = std::max(1, ov.height / downscale);
  std::vector<unsigned char> img(static_cast<std::size_t>(w) * h * 3, 32);
  const auto rgb = [](OverlayColor c) {
    return c == OverlayColor::Red ? std::array<int, 3>{0xd5, 0x00, 0x00}
                                  : std::array<int, 3>{0x00, 0xc8, 0x53};
  };
  const auto blend = [&](int x, int y, OverlayColor c, double alpha) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const auto col = rgb(c);
    unsigned char* px = &img[(static_cast<std::size_t>(y) * w + x) * 3];
    for (int i = 0; i < 3; ++i) {
      px[i] = static_cast<unsigned char>(std::lround((1.0 - alpha) * px[i] + alpha * col[i]));
    }
  };
  for (const auto& p : ov.polygons) {
    Polygon2 scaled;
    for (const auto& v : p.vertices) scaled.push_back(v / downscale);
    for (int y = 0; y < h; ++y) {
      const auto span = convex_row_span(scaled, y + 0.5);
      if (!span) continue;
      const int x0 = static_cast<int>(std::ceil(span->first - 0.5));
      const int x1 = static_cast<int>(std::floor(span->second - 0.5));
      for (int x = x0; x <= x1; ++x) blend(x, y, p.color, 0.35);
    }
  }
  for (const auto& r : ov.rects) {
    const int x0 = static_cast<int>(r.box.u_min / downscale);
    const int x1 = static_cast<int>(r.box.u_max / downscale);
    const int y0 = static_cast<int>(r.box.v_min / downscale);
    const int y1 = static_cast<int>(r.box.v_max / downscale);
    for (int x = x0; x <= x1; ++x) {
      blend(x, y0, r.color, 1.0);
      blend(x, y1, r.color, 1.0);
    }
    for (int y = y0; y <= y1; ++y) {
      blend(x0, y, r.color, 1.0);
      blend(x1, y, r.color, 1.0);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace liftwatch
