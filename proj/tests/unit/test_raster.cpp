#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "outbreak/raster.hpp"

using namespace outbreak;

namespace {

RasterGrid grid_1_to_16() {
  RasterGrid g;
  g.ncols = 4;
  g.nrows = 4;
  g.xll = 0;
  g.yll = 0;
  g.cellsize = 1;
  for (int i = 1; i <= 16; ++i) g.values.push_back(i);
  return g;
}

Shape point_shape(double x, double y) {
  Shape s;
  s.points.push_back({x, y});
  return s;
}

}  // namespace

TEST_CASE("constant raster gives that constant everywhere") {
  RasterGrid g = grid_1_to_16();
  std::fill(g.values.begin(), g.values.end(), 3.25);
  const auto z = zonal_mean(g, fixture::square_grid(2, 2, 2.0));
  for (const auto& v : z) {
    REQUIRE(v.mean.has_value());
    CHECK(*v.mean == 3.25);
    CHECK(v.cell_count == 4);
  }
}

TEST_CASE("left half of a 4x4 grid averages 7.5") {
  const auto z = zonal_mean(grid_1_to_16(), {fixture::rect_region(1, 0, 0, 2, 4)});
  REQUIRE(z[0].mean.has_value());
  CHECK(*z[0].mean == 7.5);
  CHECK(z[0].cell_count == 8);
}

TEST_CASE("all-nodata region has no mean and counts its footprint") {
  RasterGrid g = grid_1_to_16();
  g.nodata = -1;
  for (int r = 0; r < 4; ++r) g.values[static_cast<std::size_t>(r * 4)] = -1;
  const auto z = zonal_mean(g, {fixture::rect_region(1, 0, 0, 1, 4)});
  CHECK_FALSE(z[0].mean.has_value());
  CHECK(z[0].nodata_count == 4);
  CHECK(z[0].cell_count == 0);
}

TEST_CASE("region outside the extent warns") {
  Warnings w;
  const auto z = zonal_mean(grid_1_to_16(), {fixture::rect_region(1, 10, 10, 12, 12)}, &w);
  CHECK_FALSE(z[0].mean.has_value());
  CHECK_FALSE(w.empty());
}

TEST_CASE("overlapping regions: first wins, with a tie warning") {
  Warnings w;
  const auto z = zonal_mean(grid_1_to_16(),
                            {fixture::rect_region(1, 0, 0, 2, 4), fixture::rect_region(2, 1, 0, 3, 4)}, &w);
  CHECK(z[0].cell_count == 8);
  CHECK(z[1].cell_count == 4);
  CHECK_FALSE(w.empty());
}

TEST_CASE("pure region tabulates to fraction 1") {
  RasterGrid g = grid_1_to_16();
  std::fill(g.values.begin(), g.values.end(), 2.0);
  const auto t = tabulate_area(g, {fixture::rect_region(1, 0, 0, 4, 4)}, {2, 5, 7});
  CHECK(t[0].counts == std::vector<std::size_t>{16, 0, 0});
  CHECK(t[0].fractions == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("non-integer class codes are rejected") {
  RasterGrid g = grid_1_to_16();
  g.values[0] = 2.5;
  CHECK_THROWS_AS(tabulate_area(g, {fixture::rect_region(1, 0, 0, 4, 4)}, {2}), ValidationError);
}

TEST_CASE("raster ops match per-cell oracles on random fixtures") {
  Rng rng(31337);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    RasterGrid g = fixture::random_grid(rng, 30, -3.0, 0.01);
    for (auto& v : g.values) v = u(rng) < 0.05 ? g.nodata : std::floor(u(rng) * 12.0);
    const double w = g.ncols * g.cellsize;
    const double h = g.nrows * g.cellsize;
    std::vector<AdminRegion> regions;
    const int n = 1 + static_cast<int>(u(rng) * 4);
    for (int k = 0; k < n; ++k) {
      AdminRegion r;
      r.adm_id = k + 1;
      r.geometry.parts.push_back(Polygon{{fixture::star_ring(rng, g.xll + u(rng) * w, g.yll + u(rng) * h,
                                                             0.1 * w, 0.5 * w, 7)}});
      regions.push_back(std::move(r));
    }
    const auto z = zonal_mean(g, regions);
    const auto zo = oracle::zonal(g, regions);
    const std::vector<int> classes = {1, 2, 5};
    const auto t = tabulate_area(g, regions, classes);
    const auto to = oracle::tabulate(g, regions, classes);
    for (std::size_t i = 0; i < regions.size(); ++i) {
      CHECK(z[i].sum == zo[i].sum);
      CHECK(z[i].cell_count == zo[i].count);
      CHECK(z[i].nodata_count == zo[i].nodata);
      for (std::size_t k = 0; k < classes.size(); ++k) CHECK(t[i].counts[k] == to[i][k]);
      CHECK(t[i].covered == to[i].back());
      std::size_t parts = t[i].other;
      for (auto c : t[i].counts) parts += c;
      CHECK(parts == t[i].covered);
    }
  }
}

TEST_CASE("zero buffer around a point covers only coincident centers") {
  RasterGrid g = grid_1_to_16();
  g.xll = 30.0;
  g.yll = -3.0;
  g.cellsize = 0.01;
  const auto region = fixture::rect_region(1, 30.0, -3.0, 30.04, -2.96);
  const auto off = population_near_water(g, {point_shape(30.013, -2.987)}, 0.0, {region});
  CHECK(off.per_region[0].value == 0.0);
  const auto on = population_near_water(g, {point_shape(30.005, -2.995)}, 0.0, {region});
  CHECK(on.per_region[0].value == g.values[12]);  // bottom-left cell
}

TEST_CASE("3 km disc around a point matches the cell-center count") {
  // Cells of about 1 km near the equator.
  RasterGrid g;
  g.ncols = 21;
  g.nrows = 21;
  g.cellsize = 1.0 / 111.32;
  g.xll = 30.0;
  g.yll = 0.0;
  g.values.assign(21 * 21, 1.0);
  const Point water{g.xll + 10.5 * g.cellsize, g.yll + 10.5 * g.cellsize};
  const auto region = fixture::rect_region(1, g.xll, g.yll, g.xmax(), g.ymax());
  const auto r = population_near_water(g, {point_shape(water.x, water.y)}, 3.0, {region});
  const auto mask = oracle::buffer(g, {point_shape(water.x, water.y)}, {water}, 3.0);
  double expected = 0.0;
  for (auto m : mask) expected += m;
  CHECK(r.per_region[0].value == expected);
  CHECK(std::abs(expected - std::numbers::pi * 9.0) < 6.0);
}

TEST_CASE("region far from water gets 0 and an empty water set warns") {
  RasterGrid g = grid_1_to_16();
  g.xll = 30;
  g.yll = -3;
  g.cellsize = 0.01;
  const auto far = fixture::rect_region(1, 30.0, -3.0, 30.01, -2.99);
  CHECK(population_near_water(g, {point_shape(30.039, -2.961)}, 1.0, {far}).per_region[0].value == 0.0);
  Warnings w;
  const auto none = population_near_water(g, {}, 3.0, {far}, &w);
  CHECK(none.per_region[0].value == 0.0);
  CHECK_FALSE(w.empty());
}

TEST_CASE("polar water geometry is rejected") {
  RasterGrid g = grid_1_to_16();
  CHECK_THROWS_AS(buffer_mask(g, {point_shape(0, 89.9)}, 1.0), ValidationError);
}

TEST_CASE("population in class uses the class of each population cell") {
  RasterGrid pop = grid_1_to_16();
  RasterGrid cls = grid_1_to_16();
  for (std::size_t k = 0; k < 16; ++k) cls.values[k] = k % 2 == 0 ? 2.0 : 5.0;
  const auto v = population_in_class(pop, cls, 2, {fixture::rect_region(1, 0, 0, 4, 4)});
  CHECK(v[0].value == 1 + 3 + 5 + 7 + 9 + 11 + 13 + 15);
}

TEST_CASE("masked population is monotone in the buffer and bounded by the total") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    RasterGrid g = fixture::random_grid(rng, 40, -2.0, 0.01);
    for (auto& v : g.values) v = std::floor(u(rng) * 100);
    const auto region = fixture::rect_region(1, g.xll, g.yll, g.xmax(), g.ymax());
    Shape river;
    river.lines.push_back({{g.xll + u(rng) * 0.1, g.yll}, {g.xll + u(rng) * 0.3, g.yll + 0.4}});
    double last = -1.0;
    for (double km : {0.0, 1.0, 3.0, 6.0}) {
      const double v = population_near_water(g, {river}, km, {region}).per_region[0].value;
      CHECK(v >= last);
      last = v;
    }
    CHECK(last <= zonal_mean(g, {region})[0].sum);
  }
}
