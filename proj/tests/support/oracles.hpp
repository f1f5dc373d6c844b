#pragma once
// Brute-force reference implementations. Deliberately naive: dense
// matrices, all-pairs loops, per-cell scans. They share no code with the
// library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "outbreak/geometry.hpp"
#include "outbreak/ingest.hpp"

namespace oracle {

using outbreak::AdminRegion;
using outbreak::MultiPolygon;
using outbreak::Point;
using outbreak::Polygon;
using outbreak::RasterGrid;
using outbreak::Shape;

using Dense = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Geometry

inline bool pnpoly(const Polygon& poly, Point p) {
  bool inside = false;
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const Point a = ring[i];
      const Point b = ring[j];
      if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
        inside = !inside;
      }
    }
  }
  return inside;
}

inline bool inside(const MultiPolygon& shape, Point p) {
  return std::any_of(shape.parts.begin(), shape.parts.end(),
                     [&](const Polygon& poly) { return pnpoly(poly, p); });
}

inline double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline double dist_point_segment(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 == 0.0 ? 0.0 : ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline bool on_segment(Point p, Point a, Point b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool proper_or_touching_intersection(Point a, Point b, Point c, Point d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
         (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

inline double dist_segments(Point a, Point b, Point c, Point d) {
  if (proper_or_touching_intersection(a, b, c, d)) return 0.0;
  return std::min({dist_point_segment(a, c, d), dist_point_segment(b, c, d),
                   dist_point_segment(c, a, b), dist_point_segment(d, a, b)});
}

// Length of the stretch where [c,d] runs along [a,b] within `tol`.
inline double shared_length(Point a, Point b, Point c, Point d, double tol) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (len == 0.0) return 0.0;
  // Perpendicular distance of c and d from the line through a, b.
  const double nc = std::abs(cross(a, b, c)) / len;
  const double nd = std::abs(cross(a, b, d)) / len;
  if (nc > tol || nd > tol) return 0.0;
  const double ux = (b.x - a.x) / len;
  const double uy = (b.y - a.y) / len;
  const double tc = (c.x - a.x) * ux + (c.y - a.y) * uy;
  const double td = (d.x - a.x) * ux + (d.y - a.y) * uy;
  const double lo = std::max(0.0, std::min(tc, td));
  const double hi = std::min(len, std::max(tc, td));
  return std::max(0.0, hi - lo);
}

inline std::vector<std::pair<Point, Point>> edges(const MultiPolygon& shape) {
  std::vector<std::pair<Point, Point>> out;
  for (const auto& poly : shape.parts) {
    for (const auto& ring : poly.rings) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.emplace_back(ring[i], ring[i + 1]);
    }
  }
  return out;
}

/// All-pairs contiguity: queen if any two boundary segments come within
/// `tol`, rook if some pair shares a stretch longer than `tol`.
inline std::vector<std::set<std::size_t>> adjacency(const std::vector<AdminRegion>& regions,
                                                    bool queen, double tol) {
  std::vector<std::set<std::size_t>> nb(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto ei = edges(regions[i].geometry);
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const auto ej = edges(regions[j].geometry);
      bool touch = false;
      for (const auto& [a, b] : ei) {
        for (const auto& [c, d] : ej) {
          if (queen) {
            touch = dist_segments(a, b, c, d) <= tol;
          } else {
            touch = std::max(shared_length(a, b, c, d, tol), shared_length(c, d, a, b, tol)) > tol;
          }
          if (touch) break;
        }
        if (touch) break;
      }
      if (touch) {
        nb[i].insert(j);
        nb[j].insert(i);
      }
    }
  }
  return nb;
}

// ---------------------------------------------------------------------------
// Spatial statistics

inline Dense row_standardized(const std::vector<std::set<std::size_t>>& nb) {
  const std::size_t n = nb.size();
  Dense w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nb[i]) w[i][j] = 1.0 / static_cast<double>(nb[i].size());
  }
  return w;
}

/// Global Moran's I by the textbook double sum over all ordered pairs.
/// Rows of `w` that are all zero are treated as islands and left out.
inline double moran(const std::vector<double>& x, const Dense& w) {
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::any_of(w[i].begin(), w[i].end(), [](double v) { return v != 0.0; })) used.push_back(i);
  }
  double mean = 0.0;
  for (std::size_t i : used) mean += x[i];
  mean /= static_cast<double>(used.size());
  double num = 0.0;
  double s0 = 0.0;
  double den = 0.0;
  for (std::size_t i : used) {
    den += (x[i] - mean) * (x[i] - mean);
    for (std::size_t j : used) {
      num += w[i][j] * (x[i] - mean) * (x[j] - mean);
      s0 += w[i][j];
    }
  }
  return static_cast<double>(used.size()) / s0 * num / den;
}

inline std::vector<double> local_moran(const std::vector<double>& x, const Dense& w) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  for (double v : x) m2 += (v - mean) * (v - mean);
  m2 /= static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lag = 0.0;
    for (std::size_t j = 0; j < n; ++j) lag += w[i][j] * (x[j] - mean);
    out[i] = (x[i] - mean) / m2 * lag;
  }
  return out;
}

/// Conditional permutation p-value of region i, with an independent RNG:
/// x_i stays put, the other values are fully reshuffled each draw.
inline double lisa_p(const std::vector<double>& x, const Dense& w, std::size_t i, int n_perm,
                     std::uint64_t seed) {
  const std::size_t n = x.size();
  const double observed = local_moran(x, w)[i];
  std::vector<double> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) others.push_back(x[j]);
  }
  std::minstd_rand rng(static_cast<std::minstd_rand::result_type>(seed % 2147483646 + 1));
  int extreme = 0;
  std::vector<double> y(n);
  for (int p = 0; p < n_perm; ++p) {
    std::shuffle(others.begin(), others.end(), rng);
    for (std::size_t j = 0, k = 0; j < n; ++j) y[j] = j == i ? x[i] : others[k++];
    const double v = local_moran(y, w)[i];
    if (observed >= 0 ? v >= observed : v <= observed) ++extreme;
  }
  return (extreme + 1.0) / (n_perm + 1.0);
}

// ---------------------------------------------------------------------------
// Raster

struct Zonal {
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t nodata = 0;
};

inline Point center(const RasterGrid& g, int r, int c) {
  return {g.xll + (c + 0.5) * g.cellsize, g.yll + (g.nrows - r - 0.5) * g.cellsize};
}

inline int first_owner(const std::vector<AdminRegion>& regions, Point p) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (inside(regions[i].geometry, p)) return static_cast<int>(i);
  }
  return -1;
}

inline std::vector<Zonal> zonal(const RasterGrid& g, const std::vector<AdminRegion>& regions) {
  std::vector<Zonal> out(regions.size());
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      const int owner = first_owner(regions, center(g, r, c));
      if (owner < 0) continue;
      const double v = g.values[static_cast<std::size_t>(r * g.ncols + c)];
      auto& z = out[static_cast<std::size_t>(owner)];
      if (std::isnan(v) || v == g.nodata) {
        ++z.nodata;
      } else {
        z.sum += v;
        ++z.count;
      }
    }
  }
  return out;
}

/// counts[region][k] for classes[k]; the last slot holds covered cells.
inline std::vector<std::vector<std::size_t>> tabulate(const RasterGrid& g,
                                                      const std::vector<AdminRegion>& regions,
                                                      const std::vector<int>& classes) {
  std::vector<std::vector<std::size_t>> out(regions.size(),
                                            std::vector<std::size_t>(classes.size() + 1, 0));
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      const int owner = first_owner(regions, center(g, r, c));
      const double v = g.values[static_cast<std::size_t>(r * g.ncols + c)];
      if (owner < 0 || v == g.nodata) continue;
      auto& row = out[static_cast<std::size_t>(owner)];
      ++row.back();
      for (std::size_t k = 0; k < classes.size(); ++k) {
        if (static_cast<int>(v) == classes[k]) ++row[k];
      }
    }
  }
  return out;
}

/// Cell-center buffer test in a local km plane around each shape's
/// reference point (its centroid, passed in by the caller).
inline std::vector<std::uint8_t> buffer(const RasterGrid& g, const std::vector<Shape>& shapes,
                                        const std::vector<Point>& refs, double km) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.ncols * g.nrows), 0);
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const Shape& shape = shapes[s];
    const double kx = 111.320 * std::cos(refs[s].y * std::numbers::pi / 180.0);
    const double ky = 110.574;
    const auto proj = [&](Point p) { return Point{(p.x - refs[s].x) * kx, (p.y - refs[s].y) * ky}; };
    std::vector<std::vector<Point>> paths = shape.lines;
    for (const auto& poly : shape.polygons.parts) {
      for (const auto& ring : poly.rings) paths.push_back(ring);
    }
    for (int r = 0; r < g.nrows; ++r) {
      for (int c = 0; c < g.ncols; ++c) {
        auto& m = mask[static_cast<std::size_t>(r * g.ncols + c)];
        if (m) continue;
        const Point p = center(g, r, c);
        if (inside(shape.polygons, p)) {
          m = 1;
          continue;
        }
        const Point q = proj(p);
        for (const auto& pt : shape.points) {
          const Point a = proj(pt);
          if (std::hypot(q.x - a.x, q.y - a.y) <= km) m = 1;
        }
        for (const auto& path : paths) {
          if (path.size() == 1) {
            const Point a = proj(path[0]);
            if (std::hypot(q.x - a.x, q.y - a.y) <= km) m = 1;
          }
          for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (dist_point_segment(q, proj(path[i]), proj(path[i + 1])) <= km) m = 1;
          }
        }
      }
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Metrics

/// Fraction of (positive, negative) pairs ordered correctly, ties half.
inline double auc_pairs(const std::vector<int>& truth, const std::vector<double>& scores) {
  double good = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 1) continue;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (truth[j] == 1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

}  // namespace oracle
