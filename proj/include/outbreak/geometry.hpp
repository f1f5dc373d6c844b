#pragma once

#include <limits>
#include <vector>

namespace outbreak {

/// Planar coordinate. For geographic data x is longitude and y latitude, in
/// degrees.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed ring: front() == back().
using Ring = std::vector<Point>;

/// rings[0] is the shell; any further rings are holes.
struct Polygon {
  std::vector<Ring> rings;
};

struct MultiPolygon {
  std::vector<Polygon> parts;
};

/// Any mix of points, polylines and polygons; used for water features.
struct Shape {
  std::vector<Point> points;
  std::vector<std::vector<Point>> lines;
  MultiPolygon polygons;
};

struct BBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  bool empty() const { return min_x > max_x || min_y > max_y; }
  void extend(Point p);
  void extend(const BBox& other);
  BBox inflated(double margin) const;
  bool intersects(const BBox& other) const;
  bool contains(Point p) const;
};

double signed_area(const Ring& ring);
double area(const Polygon& polygon);
double area(const MultiPolygon& shape);

BBox bounds(const Ring& ring);
BBox bounds(const MultiPolygon& shape);

BBox bounds(const Shape& shape);

/// Area-weighted centroid; falls back to the vertex mean for degenerate shapes.
Point centroid(const MultiPolygon& shape);
/// Polygon centroid if the shape has area, else length-weighted line
/// midpoint, else the mean of its points.
Point centroid(const Shape& shape);

/// Intersection of edge (a, b) with the horizontal line at height y under the
/// half-open rule: the edge counts iff exactly one endpoint lies strictly
/// above y. Point-in-polygon and scanline filling both go through this
/// function so that they classify every point identically.
inline bool edge_crossing(Point a, Point b, double y, double& x) {
  if ((a.y > y) == (b.y > y)) return false;
  x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
  return true;
}

/// Even-odd containment over all rings of the polygon.
bool contains(const Polygon& polygon, Point p);
/// True if any part contains p.
bool contains(const MultiPolygon& shape, Point p);

double point_segment_distance(Point p, Point a, Point b);
bool segments_intersect(Point a, Point b, Point c, Point d);
double segment_distance(Point a, Point b, Point c, Point d);

/// Length of the common stretch of two segments, treating them as collinear
/// when both endpoints of each lie within `tolerance` of the other's line.
/// Returns 0 for non-collinear pairs.
double collinear_overlap(Point a, Point b, Point c, Point d, double tolerance);

}  // namespace outbreak
