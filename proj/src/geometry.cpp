#include "outbreak/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace outbreak {

void BBox::extend(Point p) {
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

void BBox::extend(const BBox& other) {
  if (other.empty()) return;
  extend(Point{other.min_x, other.min_y});
  extend(Point{other.max_x, other.max_y});
}

BBox BBox::inflated(double margin) const {
  if (empty()) return *this;
  return {min_x - margin, min_y - margin, max_x + margin, max_y + margin};
}

bool BBox::intersects(const BBox& other) const {
  return !(empty() || other.empty() || other.min_x > max_x || other.max_x < min_x ||
           other.min_y > max_y || other.max_y < min_y);
}

bool BBox::contains(Point p) const {
  return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
}

double signed_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * twice;
}

double area(const Polygon& polygon) {
  if (polygon.rings.empty()) return 0.0;
  double total = std::abs(signed_area(polygon.rings.front()));
  for (std::size_t r = 1; r < polygon.rings.size(); ++r) {
    total -= std::abs(signed_area(polygon.rings[r]));
  }
  return total;
}

double area(const MultiPolygon& shape) {
  double total = 0.0;
  for (const auto& part : shape.parts) total += area(part);
  return total;
}

BBox bounds(const Ring& ring) {
  BBox box;
  for (const auto& p : ring) box.extend(p);
  return box;
}

BBox bounds(const MultiPolygon& shape) {
  BBox box;
  for (const auto& part : shape.parts) {
    if (!part.rings.empty()) box.extend(bounds(part.rings.front()));
  }
  return box;
}

BBox bounds(const Shape& shape) {
  BBox box = bounds(shape.polygons);
  for (const auto& p : shape.points) box.extend(p);
  for (const auto& line : shape.lines) {
    for (const auto& p : line) box.extend(p);
  }
  return box;
}

Point centroid(const Shape& shape) {
  if (area(shape.polygons) > 0.0) return centroid(shape.polygons);
  double length = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& line : shape.lines) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const double l = std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
      length += l;
      cx += l * 0.5 * (line[i].x + line[i + 1].x);
      cy += l * 0.5 * (line[i].y + line[i + 1].y);
    }
  }
  if (length > 0.0) return {cx / length, cy / length};
  std::size_t count = 0;
  for (const auto& p : shape.points) {
    cx += p.x;
    cy += p.y;
    ++count;
  }
  for (const auto& line : shape.lines) {
    for (const auto& p : line) {
      cx += p.x;
      cy += p.y;
      ++count;
    }
  }
  if (count == 0) return centroid(shape.polygons);
  return {cx / static_cast<double>(count), cy / static_cast<double>(count)};
}

Point centroid(const MultiPolygon& shape) {
  double a = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  std::size_t vertices = 0;
  for (const auto& part : shape.parts) {
    for (std::size_t r = 0; r < part.rings.size(); ++r) {
      const Ring& ring = part.rings[r];
      // Shell counts positively and holes negatively whatever their winding.
      const double sign = (signed_area(ring) >= 0.0) == (r == 0) ? 1.0 : -1.0;
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point p = ring[i];
        const Point q = ring[i + 1];
        const double cross = sign * (p.x * q.y - q.x * p.y);
        a += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
        vx += p.x;
        vy += p.y;
        ++vertices;
      }
    }
  }
  if (std::abs(a) < 1e-300) {
    if (vertices == 0) return {};
    return {vx / static_cast<double>(vertices), vy / static_cast<double>(vertices)};
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

bool contains(const Polygon& polygon, Point p) {
  bool inside = false;
  for (const auto& ring : polygon.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      double x = 0.0;
      if (edge_crossing(ring[i], ring[i + 1], p.y, x) && p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool contains(const MultiPolygon& shape, Point p) {
  return std::any_of(shape.parts.begin(), shape.parts.end(),
                     [&](const Polygon& part) { return contains(part, p); });
}

double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

namespace {

double orient(Point a, Point b, Point c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) &&
      ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
    return true;
  }
  return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
         (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

double segment_distance(Point a, Point b, Point c, Point d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

double collinear_overlap(Point a, Point b, Point c, Point d, double tolerance) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return 0.0;
  const auto line_distance = [&](Point p) {
    return std::abs(orient(a, b, p)) / len;
  };
  if (line_distance(c) > tolerance || line_distance(d) > tolerance) return 0.0;
  const double ex = d.x - c.x;
  const double ey = d.y - c.y;
  const double len_cd = std::hypot(ex, ey);
  if (len_cd == 0.0) return 0.0;
  if (std::abs(orient(c, d, a)) / len_cd > tolerance ||
      std::abs(orient(c, d, b)) / len_cd > tolerance) {
    return 0.0;
  }
  const double tc = ((c.x - a.x) * dx + (c.y - a.y) * dy) / len;
  const double td = ((d.x - a.x) * dx + (d.y - a.y) * dy) / len;
  const double lo = std::max(0.0, std::min(tc, td));
  const double hi = std::min(len, std::max(tc, td));
  return std::max(0.0, hi - lo);
}

}  // namespace outbreak
