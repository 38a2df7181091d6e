#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

namespace liftwatch {

using Polygon2 = std::vector<Eigen::Vector2d>;

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
Polygon2 convex_hull(Polygon2 points);

/// Signed area, positive for counter-clockwise vertex order.
double signed_area(const Polygon2& poly);

/// Closed-region test for a convex polygon in either orientation. Points within
/// `tol` of an edge count as inside.
bool point_in_convex_polygon(const Polygon2& poly, const Eigen::Vector2d& p,
                             double tol = 1e-9);

/// Sutherland-Hodgman clip against the rectangle [x0,x1] x [y0,y1].
Polygon2 clip_to_rect(const Polygon2& poly, double x0, double y0, double x1,
                      double y1);

/// Horizontal extent [x_lo, x_hi] of a convex polygon on the line y, or none
/// when the line misses it.
std::optional<std::pair<double, double>> convex_row_span(const Polygon2& poly,
                                                         double y);

}  // namespace liftwatch
