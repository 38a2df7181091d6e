#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "liftwatch/geometry.hpp"

namespace liftwatch {

enum class ObjectClass { Human, MiC, MiCFrame };

inline constexpr std::array<ObjectClass, 3> kAllClasses{
    ObjectClass::Human, ObjectClass::MiC, ObjectClass::MiCFrame};

/// "human", "mic", "mic_frame".
std::string_view to_string(ObjectClass c);
/// Throws SchemaError on anything else.
ObjectClass class_from_string(std::string_view s);

using TrackId = std::int64_t;

/// Axis-aligned image box in pixel coordinates.
struct BBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
  PixelPoint center() const { return {(u_min + u_max) / 2.0, (v_min + v_max) / 2.0}; }
  bool valid() const { return u_min < u_max && v_min < v_max; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection2D {
  ObjectClass object_class = ObjectClass::Human;
  BBox bbox;
  double confidence = 1.0;
  std::size_t frame_index = 0;
  bool predicted = false;  // Kalman fill-in rather than a detector output
  std::optional<TrackId> track_id;

  /// Throws SchemaError for an inverted box or a confidence outside [0,1].
  void validate() const;
};

/// Binary mask over the pixel rectangle [u0, u0+width) x [v0, v0+height),
/// stored row-major.
class Mask2D {
 public:
  Mask2D(int u0, int v0, int width, int height);

  /// Every pixel whose integer coordinate lies inside `box`.
  static Mask2D filled(const BBox& box);

  int u0() const { return u0_; }
  int v0() const { return v0_; }
  int width() const { return width_; }
  int height() const { return height_; }
  /// [u0, v0, u0+width, v0+height]
  BBox bbox() const;

  bool at(int u, int v) const;
  void set(int u, int v, bool on = true);

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  /// Mean coordinate of the set pixels. Throws NoDataError for an empty mask.
  PixelPoint centroid() const;

  /// Set pixels, visiting only rows and columns that are multiples of
  /// `stride` away from the mask origin.
  std::vector<PixelPoint> pixels(int stride = 1) const;

  /// Run lengths over the row-major bitmap, starting with a run of zeros
  /// (possibly of length 0).
  std::vector<std::uint32_t> to_rle() const;
  static Mask2D from_rle(int u0, int v0, int width, int height,
                         const std::vector<std::uint32_t>& counts);

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Mask2D&, const Mask2D&) = default;

 private:
  int u0_;
  int v0_;
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace liftwatch

namespace liftwatch {

/// Intersection over union. Throws DomainError for a zero-area box.
double iou(const BBox& a, const BBox& b);

}  // namespace liftwatch
