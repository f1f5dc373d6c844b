#include "outbreak/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "outbreak/parallel.hpp"

namespace outbreak {

namespace {

constexpr double kKmPerDegreeLat = 110.574;
constexpr double kKmPerDegreeLonEquator = 111.320;

struct IndexRange {
  int lo = 0;
  int hi = -1;  // inclusive
};

// Rows whose center y may fall in [min_y, max_y], padded by one row.
IndexRange row_range(const RasterGrid& g, double min_y, double max_y) {
  const double top = static_cast<double>(g.nrows) - 0.5 - (max_y - g.yll) / g.cellsize;
  const double bottom = static_cast<double>(g.nrows) - 0.5 - (min_y - g.yll) / g.cellsize;
  const double lo = std::max(0.0, std::floor(top) - 1.0);
  const double hi = std::min(static_cast<double>(g.nrows - 1), std::ceil(bottom) + 1.0);
  if (lo > hi) return {};
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

IndexRange col_range(const RasterGrid& g, double min_x, double max_x) {
  const double lo = std::max(0.0, std::floor((min_x - g.xll) / g.cellsize - 0.5) - 1.0);
  const double hi =
      std::min(static_cast<double>(g.ncols - 1), std::ceil((max_x - g.xll) / g.cellsize - 0.5) + 1.0);
  if (lo > hi) return {};
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

// Scanline fill of one polygon part: calls visit(row, col) for every cell
// whose center the even-odd rule puts inside.
template <class Visit>
void scan_polygon(const RasterGrid& g, const Polygon& polygon, Visit&& visit) {
  if (polygon.rings.empty()) return;
  const BBox box = bounds(polygon.rings.front());
  const IndexRange rows = row_range(g, box.min_y, box.max_y);
  const IndexRange cols = col_range(g, box.min_x, box.max_x);
  std::vector<double> crossings;
  for (int r = rows.lo; r <= rows.hi; ++r) {
    const double y = g.cell_center(r, 0).y;
    crossings.clear();
    for (const auto& ring : polygon.rings) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        double x = 0.0;
        if (edge_crossing(ring[i], ring[i + 1], y, x)) crossings.push_back(x);
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // A center at x is inside iff an odd number of crossings lie strictly
    // to its right.
    std::size_t left = 0;
    for (int c = cols.lo; c <= cols.hi; ++c) {
      const double x = g.cell_center(r, c).x;
      while (left < crossings.size() && crossings[left] <= x) ++left;
      if (((crossings.size() - left) & 1U) != 0U) visit(r, c);
    }
  }
}

bool overlaps_grid(const RasterGrid& g, const BBox& box) {
  return box.intersects(BBox{g.xll, g.yll, g.xmax(), g.ymax()});
}

}  // namespace

CellAssignment assign_cells(const RasterGrid& grid, const std::vector<AdminRegion>& regions) {
  CellAssignment out;
  out.owner.assign(grid.values.size(), -1);
  std::vector<std::int32_t> visited(grid.values.size(), -1);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto id = static_cast<std::int32_t>(r);
    for (const auto& part : regions[r].geometry.parts) {
      scan_polygon(grid, part, [&](int row, int col) {
        const std::size_t k = static_cast<std::size_t>(row) * static_cast<std::size_t>(grid.ncols) +
                              static_cast<std::size_t>(col);
        if (visited[k] == id) return;  // already claimed through another part
        visited[k] = id;
        if (out.owner[k] < 0) {
          out.owner[k] = id;
        } else {
          ++out.boundary_ties;
        }
      });
    }
  }
  return out;
}

std::vector<ZonalValue> zonal_mean(const RasterGrid& raster, const std::vector<AdminRegion>& regions,
                                   Warnings* warnings) {
  return zonal_mean(raster, regions, assign_cells(raster, regions), warnings);
}

std::vector<ZonalValue> zonal_mean(const RasterGrid& raster, const std::vector<AdminRegion>& regions,
                                   const CellAssignment& cells, Warnings* warnings) {
  if (cells.owner.size() != raster.values.size()) {
    throw DimensionMismatch("zonal_mean: cell assignment does not match raster");
  }
  std::vector<ZonalValue> out(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) out[r].adm_id = regions[r].adm_id;
  for (std::size_t k = 0; k < raster.values.size(); ++k) {
    const std::int32_t owner = cells.owner[k];
    if (owner < 0) continue;
    auto& z = out[static_cast<std::size_t>(owner)];
    const double v = raster.values[k];
    if (raster.is_nodata(v)) {
      ++z.nodata_count;
    } else {
      z.sum += v;
      ++z.cell_count;
    }
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto& z = out[r];
    if (z.cell_count > 0) {
      z.mean = z.sum / static_cast<double>(z.cell_count);
    } else if (!overlaps_grid(raster, bounds(regions[r].geometry))) {
      warn(warnings, "adm_id " + std::to_string(z.adm_id) + " lies outside the raster extent");
    } else if (z.nodata_count == 0) {
      warn(warnings, "adm_id " + std::to_string(z.adm_id) + " contains no cell center");
    }
  }
  if (cells.boundary_ties > 0) {
    warn(warnings, std::to_string(cells.boundary_ties) +
                       " cell center(s) inside more than one region; assigned to the first");
  }
  return out;
}

std::vector<AreaTabulation> tabulate_area(const RasterGrid& classes_raster,
                                          const std::vector<AdminRegion>& regions,
                                          const std::vector<int>& classes, Warnings* warnings) {
  const CellAssignment cells = assign_cells(classes_raster, regions);
  std::vector<AreaTabulation> out(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out[r].adm_id = regions[r].adm_id;
    out[r].classes = classes;
    out[r].counts.assign(classes.size(), 0);
  }
  for (std::size_t k = 0; k < classes_raster.values.size(); ++k) {
    const std::int32_t owner = cells.owner[k];
    if (owner < 0) continue;
    const double v = classes_raster.values[k];
    if (classes_raster.is_nodata(v)) continue;
    if (std::nearbyint(v) != v) {
      throw ValidationError("class raster holds non-integer value " + std::to_string(v));
    }
    auto& t = out[static_cast<std::size_t>(owner)];
    ++t.covered;
    const auto it = std::find(classes.begin(), classes.end(), static_cast<int>(v));
    if (it == classes.end()) {
      ++t.other;
    } else {
      ++t.counts[static_cast<std::size_t>(it - classes.begin())];
    }
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto& t = out[r];
    t.fractions.assign(classes.size(), 0.0);
    if (t.covered == 0) {
      warn(warnings, "adm_id " + std::to_string(t.adm_id) + " covers no classified cell");
      continue;
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
      t.fractions[c] = static_cast<double>(t.counts[c]) / static_cast<double>(t.covered);
    }
  }
  if (cells.boundary_ties > 0) {
    warn(warnings, std::to_string(cells.boundary_ties) +
                       " cell center(s) inside more than one region; assigned to the first");
  }
  return out;
}

namespace {

// A water shape projected into a local kilometer plane around its centroid.
struct ProjectedShape {
  double lon0 = 0.0;
  double lat0 = 0.0;
  double kx = 0.0;  // km per degree longitude
  double ky = kKmPerDegreeLat;
  std::vector<Point> points;
  std::vector<std::vector<Point>> lines;  // polygon rings included
  const MultiPolygon* polygons = nullptr;
  BBox reach;  // degrees, inflated by the buffer

  Point project(Point p) const { return {(p.x - lon0) * kx, (p.y - lat0) * ky}; }

  bool within(Point center_deg, double buffer_km) const {
    if (polygons != nullptr && contains(*polygons, center_deg)) return true;
    const Point q = project(center_deg);
    for (const auto& p : points) {
      if (std::hypot(q.x - p.x, q.y - p.y) <= buffer_km) return true;
    }
    for (const auto& line : lines) {
      if (line.size() == 1 && std::hypot(q.x - line[0].x, q.y - line[0].y) <= buffer_km) {
        return true;
      }
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        if (point_segment_distance(q, line[i], line[i + 1]) <= buffer_km) return true;
      }
    }
    return false;
  }
};

ProjectedShape project_shape(const Shape& shape, double buffer_km) {
  ProjectedShape ps;
  const Point c = centroid(shape);
  ps.lon0 = c.x;
  ps.lat0 = c.y;
  const double cos_lat = std::cos(c.y * std::numbers::pi / 180.0);
  if (cos_lat <= 0.01) {
    throw ValidationError("water feature centroid at latitude " + std::to_string(c.y) +
                          " is too close to a pole for local buffering");
  }
  ps.kx = kKmPerDegreeLonEquator * cos_lat;
  for (const auto& p : shape.points) ps.points.push_back(ps.project(p));
  for (const auto& line : shape.lines) {
    std::vector<Point> projected;
    for (const auto& p : line) projected.push_back(ps.project(p));
    ps.lines.push_back(std::move(projected));
  }
  if (!shape.polygons.parts.empty()) {
    ps.polygons = &shape.polygons;
    for (const auto& part : shape.polygons.parts) {
      for (const auto& ring : part.rings) {
        std::vector<Point> projected;
        for (const auto& p : ring) projected.push_back(ps.project(p));
        ps.lines.push_back(std::move(projected));
      }
    }
  }
  const BBox box = bounds(shape);
  const double dlon = buffer_km / ps.kx;
  const double dlat = buffer_km / ps.ky;
  ps.reach = {box.min_x - dlon, box.min_y - dlat, box.max_x + dlon, box.max_y + dlat};
  return ps;
}

}  // namespace

std::vector<std::uint8_t> buffer_mask(const RasterGrid& grid, const std::vector<Shape>& shapes,
                                      double buffer_km) {
  if (!(buffer_km >= 0.0)) throw ValidationError("buffer_km must be non-negative");
  std::vector<ProjectedShape> projected;
  projected.reserve(shapes.size());
  for (const auto& s : shapes) {
    if (s.points.empty() && s.lines.empty() && s.polygons.parts.empty()) continue;
    projected.push_back(project_shape(s, buffer_km));
  }
  std::vector<std::uint8_t> mask(grid.values.size(), 0);
  parallel_for(static_cast<std::size_t>(grid.nrows), [&](std::size_t row_index) {
    const int r = static_cast<int>(row_index);
    const double y = grid.cell_center(r, 0).y;
    for (const auto& ps : projected) {
      if (y < ps.reach.min_y || y > ps.reach.max_y) continue;
      const IndexRange cols = col_range(grid, ps.reach.min_x, ps.reach.max_x);
      for (int c = cols.lo; c <= cols.hi; ++c) {
        const std::size_t k = row_index * static_cast<std::size_t>(grid.ncols) +
                              static_cast<std::size_t>(c);
        if (mask[k] != 0) continue;
        if (ps.within(grid.cell_center(r, c), buffer_km)) mask[k] = 1;
      }
    }
  });
  return mask;
}

WaterPopulation population_near_water(const RasterGrid& population,
                                      const std::vector<Shape>& water, double buffer_km,
                                      const std::vector<AdminRegion>& regions, Warnings* warnings) {
  if (water.empty()) warn(warnings, "no water features; population near water is zero everywhere");
  const auto mask = buffer_mask(population, water, buffer_km);
  WaterPopulation out;
  out.masked = population;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k] == 0) out.masked.values[k] = 0.0;
  }
  const auto zonal = zonal_mean(out.masked, regions, warnings);
  out.per_region.reserve(regions.size());
  for (const auto& z : zonal) out.per_region.push_back({z.adm_id, z.sum});
  return out;
}

std::vector<RegionValue> population_in_class(const RasterGrid& population,
                                             const RasterGrid& classes_raster, int class_code,
                                             const std::vector<AdminRegion>& regions) {
  RasterGrid masked = population;
  for (int r = 0; r < population.nrows; ++r) {
    for (int c = 0; c < population.ncols; ++c) {
      const Point p = population.cell_center(r, c);
      const double fc = std::floor((p.x - classes_raster.xll) / classes_raster.cellsize);
      const double fr =
          std::floor((classes_raster.ymax() - p.y) / classes_raster.cellsize);
      bool match = false;
      if (fc >= 0 && fr >= 0 && fc < classes_raster.ncols && fr < classes_raster.nrows) {
        const double v = classes_raster.at(static_cast<int>(fr), static_cast<int>(fc));
        match = !classes_raster.is_nodata(v) && v == static_cast<double>(class_code);
      }
      if (!match) {
        masked.values[static_cast<std::size_t>(r) * static_cast<std::size_t>(population.ncols) +
                      static_cast<std::size_t>(c)] = 0.0;
      }
    }
  }
  const auto zonal = zonal_mean(masked, regions);
  std::vector<RegionValue> out;
  out.reserve(regions.size());
  for (const auto& z : zonal) out.push_back({z.adm_id, z.sum});
  return out;
}

}  // namespace outbreak
