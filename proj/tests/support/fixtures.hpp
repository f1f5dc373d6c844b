#pragma once
// Small builders shared by unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "outbreak/geometry.hpp"
#include "outbreak/ingest.hpp"
#include "outbreak/random.hpp"

namespace fixture {

using namespace outbreak;

inline Ring rect_ring(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

inline AdminRegion rect_region(AdmId id, double x0, double y0, double x1, double y1) {
  AdminRegion r;
  r.adm_id = id;
  r.name = "R" + std::to_string(id);
  r.province = "P";
  r.country = "C";
  r.geometry.parts.push_back(Polygon{{rect_ring(x0, y0, x1, y1)}});
  return r;
}

/// cols × rows unit squares, row-major from the south-west corner.
inline std::vector<AdminRegion> square_grid(int cols, int rows, double size = 1.0) {
  std::vector<AdminRegion> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out.push_back(rect_region(r * cols + c + 1, c * size, r * size, (c + 1) * size, (r + 1) * size));
    }
  }
  return out;
}

/// Star-shaped (generally non-convex) polygon around (cx, cy).
inline Ring star_ring(Rng& rng, double cx, double cy, double r_min, double r_max, int vertices) {
  std::uniform_real_distribution<double> radius(r_min, r_max);
  Ring ring;
  for (int k = 0; k < vertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / vertices;
    const double r = radius(rng);
    ring.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
  }
  ring.push_back(ring.front());
  return ring;
}

/// Random grid of at most max_dim × max_dim cells near latitude `lat`.
inline RasterGrid random_grid(Rng& rng, int max_dim, double lat, double cellsize) {
  std::uniform_int_distribution<int> dim(4, max_dim);
  RasterGrid g;
  g.ncols = dim(rng);
  g.nrows = dim(rng);
  g.xll = 30.0;
  g.yll = lat;
  g.cellsize = cellsize;
  g.nodata = -9999.0;
  g.values.assign(static_cast<std::size_t>(g.ncols * g.nrows), 0.0);
  return g;
}

/// The 8-row sample: 2 diseases × 2 districts × 2 weeks.
inline std::string sample_csv() {
  return "Year,Week,Country,Province,District,Disease,Number of cases,Number of deaths\n"
         "2019,1,Burundi,Bururi,Matana,Malaria,511,1\n"
         "2019,2,Burundi,Bururi,Matana,Malaria,430,0\n"
         "2019,1,Burundi,Bururi,Mugamba,Malaria,200,2\n"
         "2019,2,Burundi,Bururi,Mugamba,Malaria,0,0\n"
         "2019,1,Burundi,Bururi,Matana,Cholera,3,0\n"
         "2019,2,Burundi,Bururi,Matana,Cholera,0,0\n"
         "2019,1,Burundi,Bururi,Mugamba,Cholera,0,0\n"
         "2019,2,Burundi,Bururi,Mugamba,Cholera,7,1\n";
}

inline std::vector<AdminRegion> sample_districts() {
  auto a = rect_region(1, 0, 0, 1, 1);
  a.name = "Matana";
  a.province = "Bururi";
  a.country = "Burundi";
  auto b = rect_region(2, 1, 0, 2, 1);
  b.name = "Mugamba";
  b.province = "Bururi";
  b.country = "Burundi";
  return {a, b};
}

}  // namespace fixture
