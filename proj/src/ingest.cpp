#include "outbreak/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "outbreak/csv.hpp"

namespace outbreak {

using json = nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

// "Number of cases" -> "cases", "ADM_ID" -> "adm_id".
std::string normalize_header(std::string_view raw) {
  std::string h = csv::lower(csv::trim(raw));
  if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
  if (h.rfind("number of ", 0) == 0) h.erase(0, 10);
  std::replace(h.begin(), h.end(), ' ', '_');
  return h;
}

std::string name_key(std::string_view country, std::string_view province,
                     std::string_view district) {
  return csv::lower(csv::trim(country)) + '\x1f' + csv::lower(csv::trim(province)) + '\x1f' +
         csv::lower(csv::trim(district));
}

}  // namespace

SurveillanceParse parse_surveillance_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_surveillance_csv(in);
}

SurveillanceParse parse_surveillance_csv(std::istream& in) {
  static constexpr std::array<const char*, 8> kColumns = {
      "year", "week", "country", "province", "district", "disease", "cases", "deaths"};

  SurveillanceParse out;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("surveillance CSV is empty (no header row)");

  const auto header = csv::split_line(line);
  std::array<std::size_t, kColumns.size()> column{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
      return normalize_header(h) == kColumns[c];
    });
    if (it == header.end()) {
      throw ParseError(std::string("surveillance CSV header is missing column '") + kColumns[c] +
                       "'");
    }
    column[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    try {
      const auto fields = csv::split_line(line);
      if (fields.size() != header.size()) {
        throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()));
      }
      SurveillanceRecord r;
      r.year = static_cast<int>(csv::parse_int(fields[column[0]]));
      r.week = static_cast<int>(csv::parse_int(fields[column[1]]));
      r.country = csv::trim(fields[column[2]]);
      r.province = csv::trim(fields[column[3]]);
      r.district = csv::trim(fields[column[4]]);
      r.disease = csv::trim(fields[column[5]]);
      r.cases = csv::parse_int(fields[column[6]]);
      r.deaths = csv::parse_int(fields[column[7]]);
      if (r.week < 1 || r.week > 53) throw ParseError("week out of range 1..53");
      if (r.cases < 0 || r.deaths < 0) throw ParseError("negative count");
      if (r.deaths > r.cases) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": deaths exceed cases");
      }
      const std::string key = std::to_string(r.year) + '\x1f' + std::to_string(r.week) + '\x1f' +
                              name_key(r.country, r.province, r.district) + '\x1f' +
                              csv::lower(r.disease);
      if (auto it = seen.find(key); it != seen.end()) {
        out.warnings.push_back("line " + std::to_string(line_no) +
                               ": duplicate record key, last row wins");
        out.records[it->second] = std::move(r);
      } else {
        seen.emplace(key, out.records.size());
        out.records.push_back(std::move(r));
      }
    } catch (const ParseError& e) {
      out.errors.push_back({line_no, e.what()});
    }
  }
  return out;
}

void write_surveillance_csv(const std::vector<SurveillanceRecord>& records, std::ostream& out) {
  out << "Year,Week,Country,Province,District,Disease,Number of cases,Number of deaths\n";
  for (const auto& r : records) {
    out << r.year << ',' << r.week << ',' << csv::escape(r.country) << ','
        << csv::escape(r.province) << ',' << csv::escape(r.district) << ','
        << csv::escape(r.disease) << ',' << r.cases << ',' << r.deaths << '\n';
  }
}

// ---------------------------------------------------------------------------
// GeoJSON districts

namespace {

Ring parse_ring(const json& coords, std::size_t feature) {
  if (!coords.is_array()) {
    throw ParseError("feature " + std::to_string(feature) + ": ring is not an array");
  }
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw ParseError("feature " + std::to_string(feature) + ": bad coordinate position");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& coords, std::size_t feature) {
  if (!coords.is_array() || coords.empty()) {
    throw ParseError("feature " + std::to_string(feature) + ": polygon has no rings");
  }
  Polygon polygon;
  for (const auto& ring : coords) polygon.rings.push_back(parse_ring(ring, feature));
  return polygon;
}

AdmId parse_adm_id(const json& value, std::size_t feature) {
  if (value.is_number_integer()) return value.get<AdmId>();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (std::floor(d) == d) return static_cast<AdmId>(d);
  }
  if (value.is_string()) {
    try {
      return csv::parse_int(value.get<std::string>());
    } catch (const ParseError&) {
    }
  }
  throw ParseError("feature " + std::to_string(feature) + ": adm_id is not an integer");
}

std::string string_property(const json& props, const char* key) {
  auto it = props.find(key);
  if (it == props.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace

std::vector<AdminRegion> parse_district_geojson(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_district_geojson_text(buffer.str());
}

std::vector<AdminRegion> parse_district_geojson_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("districts GeoJSON: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw ParseError("districts GeoJSON is not a FeatureCollection");
  }

  std::vector<AdminRegion> regions;
  const auto& features = doc["features"];
  regions.reserve(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& feature = features[f];
    const auto& props = feature.contains("properties") && feature["properties"].is_object()
                            ? feature["properties"]
                            : json::object();
    if (!props.contains("adm_id") || props["adm_id"].is_null()) {
      throw ValidationError("feature " + std::to_string(f) + ": missing adm_id property");
    }
    AdminRegion region;
    region.adm_id = parse_adm_id(props["adm_id"], f);
    region.name = string_property(props, "name");
    region.province = string_property(props, "province");
    region.country = string_property(props, "country");

    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw ValidationError("feature " + std::to_string(f) + ": missing geometry");
    }
    const auto& geometry = feature["geometry"];
    const std::string type = geometry.value("type", "");
    const auto& coords = geometry.contains("coordinates") ? geometry["coordinates"] : json();
    if (type == "Polygon") {
      region.geometry.parts.push_back(parse_polygon(coords, f));
    } else if (type == "MultiPolygon") {
      if (!coords.is_array() || coords.empty()) {
        throw ParseError("feature " + std::to_string(f) + ": empty MultiPolygon");
      }
      for (const auto& poly : coords) region.geometry.parts.push_back(parse_polygon(poly, f));
    } else {
      throw ValidationError("feature " + std::to_string(f) + " (adm_id " +
                            std::to_string(region.adm_id) + "): geometry type '" + type +
                            "' is not polygonal");
    }
    regions.push_back(std::move(region));
  }
  validate_regions(regions);
  return regions;
}

void validate_regions(const std::vector<AdminRegion>& regions) {
  std::set<AdmId> ids;
  for (std::size_t f = 0; f < regions.size(); ++f) {
    const auto& region = regions[f];
    const std::string who =
        "feature " + std::to_string(f) + " (adm_id " + std::to_string(region.adm_id) + ")";
    if (!ids.insert(region.adm_id).second) throw ValidationError(who + ": duplicate adm_id");
    if (region.geometry.parts.empty()) throw ValidationError(who + ": empty geometry");
    for (const auto& part : region.geometry.parts) {
      for (const auto& ring : part.rings) {
        if (ring.size() < 4) throw ValidationError(who + ": ring has fewer than 4 positions");
        if (!(ring.front() == ring.back())) throw ValidationError(who + ": ring is not closed");
        for (const auto& p : ring) {
          if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw ValidationError(who + ": non-finite coordinate");
          }
        }
      }
    }
    if (!(area(region.geometry) > 0.0)) throw ValidationError(who + ": zero area");
  }
}

namespace {

std::vector<Point> parse_positions(const json& coords, std::size_t feature) {
  return parse_ring(coords, feature);
}

void append_geometry(const json& geometry, std::size_t feature, Shape& shape) {
  const std::string type = geometry.value("type", "");
  if (type == "GeometryCollection") {
    for (const auto& g : geometry.value("geometries", json::array())) {
      append_geometry(g, feature, shape);
    }
    return;
  }
  const auto& coords = geometry.contains("coordinates") ? geometry["coordinates"] : json();
  if (type == "Point") {
    shape.points.push_back(parse_positions(json::array({coords}), feature).front());
  } else if (type == "MultiPoint") {
    for (const auto& p : parse_positions(coords, feature)) shape.points.push_back(p);
  } else if (type == "LineString") {
    shape.lines.push_back(parse_positions(coords, feature));
  } else if (type == "MultiLineString") {
    for (const auto& line : coords) shape.lines.push_back(parse_positions(line, feature));
  } else if (type == "Polygon") {
    shape.polygons.parts.push_back(parse_polygon(coords, feature));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : coords) shape.polygons.parts.push_back(parse_polygon(poly, feature));
  } else {
    throw ParseError("feature " + std::to_string(feature) + ": unsupported geometry type '" +
                     type + "'");
  }
}

}  // namespace

std::vector<Shape> parse_shapes_geojson(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_shapes_geojson_text(buffer.str());
}

std::vector<Shape> parse_shapes_geojson_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("GeoJSON: ") + e.what());
  }
  std::vector<Shape> shapes;
  const std::string type = doc.value("type", "");
  if (type == "FeatureCollection") {
    const auto& features = doc.value("features", json::array());
    for (std::size_t f = 0; f < features.size(); ++f) {
      Shape shape;
      if (features[f].contains("geometry") && features[f]["geometry"].is_object()) {
        append_geometry(features[f]["geometry"], f, shape);
      }
      shapes.push_back(std::move(shape));
    }
  } else if (type == "Feature") {
    Shape shape;
    if (doc.contains("geometry") && doc["geometry"].is_object()) {
      append_geometry(doc["geometry"], 0, shape);
    }
    shapes.push_back(std::move(shape));
  } else {
    Shape shape;
    append_geometry(doc, 0, shape);
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

// ---------------------------------------------------------------------------
// ESRI ASCII grid

RasterGrid parse_ascii_grid(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_ascii_grid(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

RasterGrid parse_ascii_grid(std::istream& in) {
  RasterGrid grid;
  std::map<std::string, std::string> header;
  std::string token;
  // Header keys are alphabetic; the first numeric token starts the data block.
  while (in >> token) {
    if (!token.empty() && (std::isalpha(static_cast<unsigned char>(token[0])) != 0)) {
      std::string value;
      if (!(in >> value)) throw ParseError("header key '" + token + "' has no value");
      header[csv::lower(token)] = value;
    } else {
      break;
    }
  }
  const auto require = [&](const char* key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError(std::string("missing header ") + key);
    return it->second;
  };
  grid.ncols = static_cast<int>(csv::parse_int(require("ncols")));
  grid.nrows = static_cast<int>(csv::parse_int(require("nrows")));
  grid.cellsize = csv::parse_double(require("cellsize"));
  if (grid.ncols <= 0 || grid.nrows <= 0) throw ParseError("ncols and nrows must be positive");
  if (!(grid.cellsize > 0.0)) throw ParseError("cellsize must be positive");
  if (header.count("xllcorner") != 0U) {
    grid.xll = csv::parse_double(header["xllcorner"]);
  } else {
    grid.xll = csv::parse_double(require("xllcenter")) - grid.cellsize / 2;
  }
  if (header.count("yllcorner") != 0U) {
    grid.yll = csv::parse_double(header["yllcorner"]);
  } else {
    grid.yll = csv::parse_double(require("yllcenter")) - grid.cellsize / 2;
  }
  if (header.count("nodata_value") != 0U) grid.nodata = csv::parse_double(header["nodata_value"]);

  const std::size_t expected =
      static_cast<std::size_t>(grid.ncols) * static_cast<std::size_t>(grid.nrows);
  grid.values.reserve(expected);
  bool have = !token.empty() && std::isalpha(static_cast<unsigned char>(token[0])) == 0;
  while (have) {
    const std::size_t k = grid.values.size();
    if (k >= expected) {
      throw ParseError("cell count mismatch: more than " + std::to_string(expected) + " values");
    }
    try {
      grid.values.push_back(csv::parse_double(token));
    } catch (const ParseError&) {
      throw ParseError("unparsable token '" + token + "' at row " +
                       std::to_string(k / static_cast<std::size_t>(grid.ncols)) + ", column " +
                       std::to_string(k % static_cast<std::size_t>(grid.ncols)));
    }
    have = static_cast<bool>(in >> token);
  }
  if (grid.values.size() != expected) {
    throw ParseError("cell count mismatch: expected " + std::to_string(expected) + ", found " +
                     std::to_string(grid.values.size()));
  }
  return grid;
}

void write_ascii_grid(const RasterGrid& grid, std::ostream& out) {
  out << "ncols " << grid.ncols << '\n'
      << "nrows " << grid.nrows << '\n'
      << "xllcorner " << csv::format_double(grid.xll) << '\n'
      << "yllcorner " << csv::format_double(grid.yll) << '\n'
      << "cellsize " << csv::format_double(grid.cellsize) << '\n'
      << "NODATA_value " << csv::format_double(grid.nodata) << '\n';
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (c != 0) out << ' ';
      out << csv::format_double(grid.at(r, c));
    }
    out << '\n';
  }
}

void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_ascii_grid(grid, out);
}

// ---------------------------------------------------------------------------
// Point CSV

std::vector<PointValue> parse_point_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_point_csv(in);
}

std::vector<PointValue> parse_point_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("point CSV is empty");
  const auto header = csv::split_line(line);
  std::array<std::size_t, 3> column{};
  const std::array<const char*, 3> names = {"lon", "lat", "value"};
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return normalize_header(h) == names[c]; });
    if (it == header.end()) {
      throw ParseError(std::string("point CSV header is missing column '") + names[c] + "'");
    }
    column[c] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<PointValue> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("point CSV line " + std::to_string(line_no) + ": wrong field count");
    }
    PointValue p;
    try {
      p.lon = csv::parse_double(fields[column[0]]);
      p.lat = csv::parse_double(fields[column[1]]);
      p.value = csv::parse_double(fields[column[2]]);
    } catch (const ParseError& e) {
      throw ParseError("point CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || !std::isfinite(p.value)) {
      throw ParseError("point CSV line " + std::to_string(line_no) + ": non-finite value");
    }
    points.push_back(p);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Panel

Date surveillance_week_date(int year, int week) {
  return make_date(year, 1, 1) + std::chrono::days{7 * (week - 1)};
}

PanelBuild build_panel(const std::vector<SurveillanceRecord>& records,
                       const std::vector<AdminRegion>& districts, Date start, int n_weeks,
                       const std::string& disease) {
  if (districts.empty()) throw ValidationError("build_panel: empty district list");
  if (n_weeks < 1) throw ValidationError("build_panel: n_weeks must be at least 1");

  std::unordered_map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < districts.size(); ++i) {
    const auto& d = districts[i];
    const auto [it, inserted] = lookup.emplace(name_key(d.country, d.province, d.name), i);
    if (!inserted) {
      throw ValidationError("ambiguous district name '" + d.name + "' in " + d.province + ", " +
                            d.country + " (adm_id " + std::to_string(districts[it->second].adm_id) +
                            " and " + std::to_string(d.adm_id) + ")");
    }
  }

  PanelBuild out;
  auto& panel = out.panel;
  panel.diseases = {csv::trim(disease)};
  panel.start = start;
  panel.n_weeks = n_weeks;
  panel.districts.reserve(districts.size());
  for (const auto& d : districts) panel.districts.push_back(d.adm_id);
  panel.counts.assign(panel.cells_per_disease(), 0);

  const std::string wanted = csv::lower(csv::trim(disease));
  std::set<std::string> unmatched;
  std::size_t merged = 0;
  std::vector<bool> occupied(panel.counts.size(), false);
  for (const auto& r : records) {
    if (csv::lower(csv::trim(r.disease)) != wanted) continue;
    const auto it = lookup.find(name_key(r.country, r.province, r.district));
    if (it == lookup.end()) {
      unmatched.insert(r.country + "/" + r.province + "/" + r.district);
      ++out.dropped_unmatched;
      continue;
    }
    const long offset = days_between(start, surveillance_week_date(r.year, r.week));
    if (offset < 0 || offset >= 7L * n_weeks) {
      ++out.dropped_out_of_range;
      continue;
    }
    const std::size_t idx = panel.index(0, it->second, static_cast<std::size_t>(offset / 7));
    if (occupied[idx]) ++merged;
    occupied[idx] = true;
    panel.counts[idx] += r.cases;
  }
  out.unmatched.assign(unmatched.begin(), unmatched.end());
  if (!out.unmatched.empty()) {
    out.warnings.push_back(std::to_string(out.dropped_unmatched) + " rows dropped: " +
                           std::to_string(out.unmatched.size()) + " unmatched district names");
  }
  if (out.dropped_out_of_range != 0) {
    out.warnings.push_back(std::to_string(out.dropped_out_of_range) +
                           " rows dropped: week outside panel range");
  }
  if (merged != 0) {
    out.warnings.push_back(std::to_string(merged) +
                           " rows summed into an already occupied district-week cell");
  }
  return out;
}

namespace {

// Picks the (year, week) whose surveillance_week_date falls inside
// [window, window + 7).
std::pair<int, int> week_label(Date window) {
  for (int year : {year_of(window), year_of(window + std::chrono::days{6})}) {
    const Date jan1 = make_date(year, 1, 1);
    const long delta = days_between(jan1, window);
    const long k = delta <= 0 ? 0 : (delta + 6) / 7;
    const Date d = jan1 + std::chrono::days{7 * k};
    if (d < window + std::chrono::days{7} && year_of(d) == year) {
      return {year, static_cast<int>(k) + 1};
    }
  }
  throw Error("no surveillance week label for " + format_date(window));
}

}  // namespace

std::vector<SurveillanceRecord> panel_to_records(const SurveillancePanel& panel,
                                                 const std::vector<AdminRegion>& districts) {
  if (districts.size() != panel.districts.size()) {
    throw DimensionMismatch("panel_to_records: district list does not match panel");
  }
  std::vector<SurveillanceRecord> records;
  records.reserve(panel.counts.size());
  for (std::size_t d = 0; d < panel.diseases.size(); ++d) {
    for (std::size_t r = 0; r < panel.districts.size(); ++r) {
      for (int w = 0; w < panel.n_weeks; ++w) {
        const auto [year, week] = week_label(panel.week_start(static_cast<std::size_t>(w)));
        SurveillanceRecord rec;
        rec.year = year;
        rec.week = week;
        rec.country = districts[r].country;
        rec.province = districts[r].province;
        rec.district = districts[r].name;
        rec.disease = panel.diseases[d];
        rec.cases = panel.at(d, r, static_cast<std::size_t>(w));
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::vector<double> district_totals(const SurveillancePanel& panel, std::size_t disease) {
  std::vector<double> totals(panel.districts.size(), 0.0);
  for (std::size_t r = 0; r < panel.districts.size(); ++r) {
    std::int64_t sum = 0;
    for (int w = 0; w < panel.n_weeks; ++w) sum += panel.at(disease, r, static_cast<std::size_t>(w));
    totals[r] = static_cast<double>(sum);
  }
  return totals;
}

}  // namespace outbreak
