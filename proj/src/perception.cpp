#include "liftwatch/perception.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include "liftwatch/errors.hpp"
#include "liftwatch/polygon.hpp"

namespace liftwatch {

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Human:
      return "human";
    case ObjectClass::MiC:
      return "mic";
    case ObjectClass::MiCFrame:
      return "mic_frame";
  }
  return "?";
}

ObjectClass class_from_string(std::string_view s) {
  for (ObjectClass c : kAllClasses) {
    if (to_string(c) == s) return c;
  }
  throw SchemaError("unknown object class '" + std::string(s) + "'");
}

void Detection2D::validate() const {
  if (!bbox.valid()) throw SchemaError("detection bbox must satisfy u_min<u_max, v_min<v_max");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw SchemaError("detection confidence " + std::to_string(confidence) +
                      " outside [0,1]");
  }
}

Mask2D::Mask2D(int u0, int v0, int width, int height)
    : u0_(u0), v0_(v0), width_(width), height_(height) {
  if (width < 0 || height < 0) throw DomainError("Mask2D: negative dimensions");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

Mask2D Mask2D::filled(const BBox& box) {
  const int u0 = static_cast<int>(std::ceil(box.u_min));
  const int v0 = static_cast<int>(std::ceil(box.v_min));
  const int u1 = static_cast<int>(std::floor(box.u_max));
  const int v1 = static_cast<int>(std::floor(box.v_max));
  Mask2D m(u0, v0, std::max(0, u1 - u0 + 1), std::max(0, v1 - v0 + 1));
  std::fill(m.bits_.begin(), m.bits_.end(), 1);
  return m;
}

BBox Mask2D::bbox() const {
  return {static_cast<double>(u0_), static_cast<double>(v0_),
          static_cast<double>(u0_ + width_), static_cast<double>(v0_ + height_)};
}

bool Mask2D::at(int u, int v) const {
  const int x = u - u0_;
  const int y = v - v0_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
}

void Mask2D::set(int u, int v, bool on) {
  const int x = u - u0_;
  const int y = v - v0_;
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw DomainError("Mask2D::set outside the mask rectangle");
  }
  bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0;
}

std::size_t Mask2D::count() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

PixelPoint Mask2D::centroid() const {
  double su = 0.0, sv = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height_; ++y) {
    const std::uint8_t* row = bits_.data() + static_cast<std::size_t>(y) * width_;
    for (int x = 0; x < width_; ++x) {
      if (row[x]) {
        su += x;
        sv += y;
        ++n;
      }
    }
  }
  if (n == 0) throw NoDataError("Mask2D::centroid of an empty mask");
  const double dn = static_cast<double>(n);
  return {u0_ + su / dn, v0_ + sv / dn};
}

std::vector<PixelPoint> Mask2D::pixels(int stride) const {
  if (stride < 1) throw DomainError("Mask2D::pixels: stride must be >= 1");
  std::vector<PixelPoint> out;
  for (int y = 0; y < height_; y += stride) {
    for (int x = 0; x < width_; x += stride) {
      if (bits_[static_cast<std::size_t>(y) * width_ + x]) {
        out.push_back({static_cast<double>(u0_ + x), static_cast<double>(v0_ + y)});
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> Mask2D::to_rle() const {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto b : bits_) {
    if (b != current) {
      counts.push_back(run);
      current = b;
      run = 0;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

Mask2D Mask2D::from_rle(int u0, int v0, int width, int height,
                        const std::vector<std::uint32_t>& counts) {
  Mask2D m(u0, v0, width, height);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (auto c : counts) {
    if (pos + c > m.bits_.size()) throw SchemaError("RLE runs exceed mask size");
    std::fill_n(m.bits_.begin() + static_cast<std::ptrdiff_t>(pos), c, value);
    pos += c;
    value ^= 1;
  }
  if (pos != m.bits_.size()) throw SchemaError("RLE runs do not cover the mask");
  return m;
}

// ---- polygon helpers ------------------------------------------------------

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
             const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

Polygon2 convex_hull(Polygon2 pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Polygon2 hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double signed_area(const Polygon2& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return a / 2.0;
}

bool point_in_convex_polygon(const Polygon2& poly, const Eigen::Vector2d& p,
                             double tol) {
  if (poly.size() < 3) return false;
  const double orient = signed_area(poly) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    // Signed distance of p from the edge line, positive on the inner side.
    if (orient * cross(a, b, p) / len < -tol) return false;
  }
  return true;
}

Polygon2 clip_to_rect(const Polygon2& poly, double x0, double y0, double x1,
                      double y1) {
  Polygon2 out = poly;
  // Each edge keeps points with f(p) >= 0.
  const auto clip = [&out](auto inside, auto intersect) {
    Polygon2 in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto& cur = in[i];
      const auto& prev = in[(i + in.size() - 1) % in.size()];
      const bool ci = inside(cur);
      const bool pi = inside(prev);
      if (ci) {
        if (!pi) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pi) {
        out.push_back(intersect(prev, cur));
      }
    }
  };
  const auto on_x = [](double x) {
    return [x](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      const double t = (x - a.x()) / (b.x() - a.x());
      return Eigen::Vector2d(x, a.y() + t * (b.y() - a.y()));
    };
  };
  const auto on_y = [](double y) {
    return [y](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      const double t = (y - a.y()) / (b.y() - a.y());
      return Eigen::Vector2d(a.x() + t * (b.x() - a.x()), y);
    };
  };
  clip([x0](const Eigen::Vector2d& p) { return p.x() >= x0; }, on_x(x0));
  clip([x1](const Eigen::Vector2d& p) { return p.x() <= x1; }, on_x(x1));
  clip([y0](const Eigen::Vector2d& p) { return p.y() >= y0; }, on_y(y0));
  clip([y1](const Eigen::Vector2d& p) { return p.y() <= y1; }, on_y(y1));
  return out;
}

}  // namespace liftwatch

namespace liftwatch {

double iou(const BBox& a, const BBox& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) {
    throw DomainError("iou: degenerate box");
  }
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::optional<std::pair<double, double>> convex_row_span(const Polygon2& poly,
                                                         double y) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    if (a.y() == y) {
      lo = std::min(lo, a.x());
      hi = std::max(hi, a.x());
    }
    if ((a.y() < y && b.y() > y) || (a.y() > y && b.y() < y)) {
      const double x = a.x() + (y - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

}  // namespace liftwatch
