#include "outbreak/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "outbreak/csv.hpp"
#include "outbreak/random.hpp"

namespace outbreak::synth {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<AdminRegion> lattice_regions(int cols, int rows, double x0, double y0, double size,
                                         double jitter, std::uint64_t seed, AdmId first_id) {
  if (cols < 1 || rows < 1 || !(size > 0.0)) throw ValidationError("lattice needs cols, rows >= 1");
  if (!(jitter >= 0.0 && jitter < 0.25)) throw ValidationError("lattice jitter must lie in [0, 0.25)");
  Rng rng(seed);
  std::uniform_real_distribution<double> shift(-jitter * size, jitter * size);
  const auto vcols = static_cast<std::size_t>(cols + 1);
  std::vector<Point> v(vcols * static_cast<std::size_t>(rows + 1));
  for (int r = 0; r <= rows; ++r) {
    for (int c = 0; c <= cols; ++c) {
      Point p{x0 + c * size, y0 + r * size};
      if (r > 0 && r < rows && c > 0 && c < cols && jitter > 0.0) {
        p.x += shift(rng);
        p.y += shift(rng);
      }
      v[static_cast<std::size_t>(r) * vcols + static_cast<std::size_t>(c)] = p;
    }
  }
  const auto at = [&](int r, int c) {
    return v[static_cast<std::size_t>(r) * vcols + static_cast<std::size_t>(c)];
  };
  std::vector<AdminRegion> regions;
  regions.reserve(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      AdminRegion region;
      region.adm_id = first_id + static_cast<AdmId>(r) * cols + c;
      region.name = "District " + std::to_string(r + 1) + "-" + std::to_string(c + 1);
      region.province = "Province " + std::to_string(r / 3 + 1);
      region.country = "Synthland";
      Ring ring = {at(r, c), at(r, c + 1), at(r + 1, c + 1), at(r + 1, c), at(r, c)};
      region.geometry.parts.push_back(Polygon{{std::move(ring)}});
      regions.push_back(std::move(region));
    }
  }
  return regions;
}

std::string regions_to_geojson(const std::vector<AdminRegion>& regions) {
  json features = json::array();
  for (const auto& r : regions) {
    json parts = json::array();
    for (const auto& poly : r.geometry.parts) {
      json rings = json::array();
      for (const auto& ring : poly.rings) {
        json coords = json::array();
        for (const auto& p : ring) coords.push_back({p.x, p.y});
        rings.push_back(std::move(coords));
      }
      parts.push_back(std::move(rings));
    }
    json geometry = parts.size() == 1
                        ? json{{"type", "Polygon"}, {"coordinates", parts[0]}}
                        : json{{"type", "MultiPolygon"}, {"coordinates", parts}};
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"adm_id", r.adm_id},
                          {"name", r.name},
                          {"province", r.province},
                          {"country", r.country}}},
                        {"geometry", std::move(geometry)}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n";
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

double season(int week) { return 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * week / 52.0); }

}  // namespace

fs::path write_mini_region(const fs::path& dir, const MiniRegionSpec& spec) {
  if (spec.cells_per_district < 1 || spec.n_weeks < 1) {
    throw ValidationError("mini region needs cells_per_district >= 1 and n_weeks >= 1");
  }
  fs::create_directories(dir / "rasters");
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto regions =
      lattice_regions(spec.cols, spec.rows, spec.lon0, spec.lat0, spec.district_deg, 0.15, spec.seed);
  write_text(dir / "districts.geojson", regions_to_geojson(regions));

  // Outbreak intensity peaks around a hotspot in the south-east.
  const Point hot{spec.lon0 + 0.7 * spec.cols * spec.district_deg,
                  spec.lat0 + 0.35 * spec.rows * spec.district_deg};
  const double spread = 2.0 * spec.district_deg;
  const auto intensity = [&](Point p) {
    const double dx = p.x - hot.x;
    const double dy = p.y - hot.y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * spread * spread));
  };

  RasterGrid base;
  base.ncols = spec.cols * spec.cells_per_district;
  base.nrows = spec.rows * spec.cells_per_district;
  base.xll = spec.lon0;
  base.yll = spec.lat0;
  base.cellsize = spec.district_deg / spec.cells_per_district;
  base.nodata = -9999.0;
  base.values.assign(static_cast<std::size_t>(base.ncols) * static_cast<std::size_t>(base.nrows), 0.0);
  const auto fill = [&](auto&& fn) {
    RasterGrid g = base;
    for (int r = 0; r < g.nrows; ++r) {
      for (int c = 0; c < g.ncols; ++c) {
        g.values[static_cast<std::size_t>(r) * static_cast<std::size_t>(g.ncols) +
                 static_cast<std::size_t>(c)] = fn(g.cell_center(r, c), r, c);
      }
    }
    return g;
  };
  const auto round_to = [](double v, double step) { return std::round(v / step) * step; };

  RasterGrid elevation = fill([&](Point p, int r, int c) {
    if (r < 2 && c < 2) return base.nodata;  // a small hole in coverage
    return round_to(900.0 + 450.0 * std::sin(1.3 * p.x) * std::cos(0.9 * p.y) + 20.0 * unit(rng), 0.1);
  });
  write_ascii_grid(elevation, dir / "rasters" / "elevation.asc");

  RasterGrid population = fill([&](Point p, int, int) {
    return round_to(25.0 + 2500.0 * intensity(p) + 40.0 * unit(rng), 0.01);
  });
  write_ascii_grid(population, dir / "rasters" / "population_2019.asc");

  // Esri land-cover codes: 1 water, 2 trees, 5 crops, 7 built, 8 bare, 11 rangeland.
  RasterGrid landcover = fill([&](Point p, int r, int c) {
    const std::size_t i = static_cast<std::size_t>(r) * static_cast<std::size_t>(base.ncols) +
                          static_cast<std::size_t>(c);
    const double u = unit(rng);
    if (population.values[i] > 1800.0 && u < 0.7) return 7.0;
    if (elevation.values[i] != base.nodata && elevation.values[i] > 1300.0) return u < 0.6 ? 8.0 : 11.0;
    if (u < 0.02) return 1.0;
    const double wet = 0.5 + 0.5 * std::sin(2.0 * p.x + p.y);
    if (u < 0.25 + 0.4 * wet) return 2.0;
    if (u < 0.8) return 5.0;
    return 11.0;
  });
  write_ascii_grid(landcover, dir / "rasters" / "landcover_2019.asc");

  const Date start = make_date(2019, 1, 1);
  json precip_grids = json::array();
  json temp_grids = json::array();
  for (int w = 0; w < spec.n_weeks; w += 4) {
    const Date d = start + std::chrono::days{7 * w};
    const std::string tag = format_date(d);
    RasterGrid precip = fill([&](Point p, int, int) {
      return round_to(15.0 + 60.0 * season(w) * (1.0 + 0.3 * std::sin(p.x)) + 5.0 * unit(rng), 0.01);
    });
    RasterGrid temp = fill([&](Point, int r, int c) {
      const double e = elevation.at(r, c);
      const double elev = e == base.nodata ? 900.0 : e;
      return round_to(22.0 - 0.0065 * (elev - 900.0) + 2.0 * std::sin(2.0 * std::numbers::pi * w / 52.0) +
                          0.5 * unit(rng),
                      0.01);
    });
    const std::string pname = "rasters/precipitation_" + tag + ".asc";
    const std::string tname = "rasters/temperature_" + tag + ".asc";
    write_ascii_grid(precip, dir / pname);
    write_ascii_grid(temp, dir / tname);
    precip_grids.push_back({{"date", tag}, {"path", pname}});
    temp_grids.push_back({{"date", tag}, {"path", tname}});
  }

  // Water: a river, a lake near the hotspot, and a spring.
  const double w_deg = spec.cols * spec.district_deg;
  const double h_deg = spec.rows * spec.district_deg;
  const json river = {{"type", "LineString"},
                      {"coordinates",
                       {{spec.lon0 + 0.05 * w_deg, spec.lat0 + 0.1 * h_deg},
                        {spec.lon0 + 0.45 * w_deg, spec.lat0 + 0.4 * h_deg},
                        {spec.lon0 + 0.95 * w_deg, spec.lat0 + 0.85 * h_deg}}}};
  const double lx = hot.x + 0.3 * spec.district_deg;
  const double ly = hot.y - 0.3 * spec.district_deg;
  const double lr = 0.15 * spec.district_deg;
  const json lake = {{"type", "Polygon"},
                     {"coordinates",
                      {{{lx - lr, ly - lr}, {lx + lr, ly - lr}, {lx + lr, ly + lr}, {lx - lr, ly + lr},
                        {lx - lr, ly - lr}}}}};
  const json spring = {{"type", "Point"},
                       {"coordinates", {spec.lon0 + 0.2 * w_deg, spec.lat0 + 0.8 * h_deg}}};
  json water_features = json::array();
  for (const auto& [name, geom] : {std::pair{"river", river}, std::pair{"lake", lake},
                                   std::pair{"spring", spring}}) {
    water_features.push_back({{"type", "Feature"},
                              {"properties", {{"natural", "water"}, {"name", name}}},
                              {"geometry", geom}});
  }
  write_text(dir / "water.geojson",
             json{{"type", "FeatureCollection"}, {"features", water_features}}.dump(1) + "\n");

  // Sparse wealth points: some districts receive none and use the fallback.
  {
    std::ofstream out(dir / "wealth.csv");
    out << "lon,lat,value\n";
    const int n_points = spec.cols * spec.rows * 3 / 4;
    for (int i = 0; i < n_points; ++i) {
      const Point p{spec.lon0 + unit(rng) * w_deg, spec.lat0 + unit(rng) * h_deg};
      const double value = std::round((-0.6 + 0.8 * intensity(p) + 0.4 * unit(rng)) * 1000.0) / 1000.0;
      out << csv::format_double(p.x) << ',' << csv::format_double(p.y) << ',' << csv::format_double(value) << '\n';
    }
  }

  // Surveillance: Poisson counts; zero weeks are omitted as in real exports.
  std::vector<SurveillanceRecord> records;
  for (const auto& region : regions) {
    const double hotness = intensity(centroid(region.geometry));
    for (int w = 0; w < spec.n_weeks; ++w) {
      const Date d = start + std::chrono::days{7 * w};
      const int year = year_of(d);
      const int week = static_cast<int>(days_between(make_date(year, 1, 1), d) / 7) + 1;
      const double lambda_target = 0.03 + 4.0 * hotness * season(w);
      const double lambda_other = 0.6;
      for (const auto& [disease, lambda] :
           {std::pair{spec.disease, lambda_target}, std::pair{std::string("Malaria"), lambda_other}}) {
        std::poisson_distribution<long long> draw(lambda);
        const long long cases = draw(rng);
        if (cases == 0) continue;
        std::binomial_distribution<long long> die(cases, 0.02);
        records.push_back({year, week, region.country, region.province, region.name, disease,
                           cases, die(rng)});
      }
    }
  }
  records.push_back({2019, 3, "Synthland", "Province 9", "Atlantis", spec.disease, 4, 0});
  {
    std::ofstream out(dir / "surveillance.csv");
    write_surveillance_csv(records, out);
  }

  const json config = {
      {"disease", spec.disease},
      {"output_dir", "out"},
      {"seed", 12345},
      {"panel", {{"start", format_date(start)}, {"n_weeks", spec.n_weeks}}},
      {"inputs",
       {{"surveillance", "surveillance.csv"},
        {"districts", "districts.geojson"},
        {"water", "water.geojson"},
        {"wealth", "wealth.csv"},
        {"rasters",
         {{"elevation", "rasters/elevation.asc"},
          {"population",
           {{"cadence", "yearly"},
            {"grids", {{{"date", "2019-01-01"}, {"path", "rasters/population_2019.asc"}}}}}},
          {"landcover",
           {{"cadence", "yearly"},
            {"grids", {{{"date", "2019-01-01"}, {"path", "rasters/landcover_2019.asc"}}}}}},
          {"precipitation", {{"cadence", "weekly"}, {"aggregate", "mean"}, {"grids", precip_grids}}},
          {"temperature", {{"cadence", "weekly"}, {"aggregate", "mean"}, {"grids", temp_grids}}}}}}},
      {"features",
       {{"buffer_km", {3, 1, 6}},
        {"landcover_classes",
         {{"trees", 2}, {"crops", 5}, {"built_up", 7}, {"bare_ground", 8}, {"rangeland", 11}}}}},
      {"weights", {{"contiguity", "queen"}, {"tolerance", 1e-9}}},
      {"esda", {{"n_perm", 999}, {"alpha", 0.05}}},
      {"learn",
       {{"test_fraction", 0.2},
        {"stratified", false},
        {"resample", "none"},
        {"scaler", "robust"},
        {"forest",
         {{"criterion", "gini"}, {"n_trees", 50}, {"max_depth", 0}, {"min_leaf", 1},
          {"features_per_split", 0}}},
        {"importance_repeats", 5}}}};
  const fs::path config_path = dir / "config.json";
  write_text(config_path, config.dump(2) + "\n");
  return config_path;
}

}  // namespace outbreak::synth
