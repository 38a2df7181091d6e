#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "liftwatch/calibration.hpp"
#include "liftwatch/depth_fusion.hpp"
#include "liftwatch/polygon.hpp"
#include "liftwatch/safety.hpp"

namespace liftwatch {

enum class OverlayColor { Green, Red };

/// "#00c853" or "#d50000".
std::string_view to_hex(OverlayColor c);

struct OverlayPolygon {
  Polygon2 vertices;  // pixels, inside the image
  OverlayColor color = OverlayColor::Green;
  std::string label;
};

struct OverlayRect {
  BBox box;
  OverlayColor color = OverlayColor::Green;
  std::string label;
};

struct OverlayLabel {
  PixelPoint at;
  std::string text;
  OverlayColor color = OverlayColor::Green;
};

struct Overlay {
  std::size_t frame_index = 0;
  int width = 0;
  int height = 0;
  std::vector<OverlayPolygon> polygons;
  std::vector<OverlayRect> rects;
  std::vector<OverlayLabel> labels;
  std::vector<std::string> notes;  // zones dropped from the drawing, and why
};

/// Danger zones re-projected into the image and clipped to it, plus one box
/// per localization. Everything is green for a Safe verdict. For Danger,
/// zones holding a flagged human, flagged humans, their MiC and colliding
/// frames are red. Zones with a corner behind the camera are omitted and
/// noted.
Overlay render_overlay(const SafetyVerdict& verdict,
                       std::span<const Localization3D> localizations,
                       const Calibration& calib);

std::string to_svg(const Overlay& overlay);
void write_svg(const Overlay& overlay, const std::filesystem::path& path);

/// Composited raster at 1/downscale resolution: translucent zone fills and
/// box outlines on a dark background.
void write_ppm(const Overlay& overlay, const std::filesystem::path& path,
               int downscale = 4);

}  // namespace liftwatch
