#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "outbreak/date.hpp"
#include "outbreak/error.hpp"
#include "outbreak/geometry.hpp"

namespace outbreak {

using AdmId = std::int64_t;

/// One row of the weekly surveillance export.
struct SurveillanceRecord {
  int year = 0;
  int week = 0;  // 1-based within year
  std::string country;
  std::string province;
  std::string district;
  std::string disease;
  std::int64_t cases = 0;
  std::int64_t deaths = 0;
};

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct SurveillanceParse {
  std::vector<SurveillanceRecord> records;
  std::vector<RowError> errors;
  Warnings warnings;
};

/// Reads the eight-column surveillance CSV. A missing header column is fatal;
/// bad rows are collected in `errors` and skipped. Duplicate
/// (year, week, district, disease) keys keep the last row.
SurveillanceParse parse_surveillance_csv(const std::filesystem::path& path);
SurveillanceParse parse_surveillance_csv(std::istream& in);

void write_surveillance_csv(const std::vector<SurveillanceRecord>& records, std::ostream& out);

struct AdminRegion {
  AdmId adm_id = 0;
  std::string name;
  std::string province;
  std::string country;
  MultiPolygon geometry;
};

/// Reads a GeoJSON FeatureCollection of Polygon / MultiPolygon districts.
/// Feature order is preserved. Throws ParseError or ValidationError naming
/// the offending feature index.
std::vector<AdminRegion> parse_district_geojson(const std::filesystem::path& path);
std::vector<AdminRegion> parse_district_geojson_text(const std::string& text);

/// Checks ring closure, non-zero area and adm_id uniqueness.
void validate_regions(const std::vector<AdminRegion>& regions);

/// Reads any GeoJSON (FeatureCollection, Feature or bare geometry) into one
/// Shape per feature. All geometry types are accepted.
std::vector<Shape> parse_shapes_geojson(const std::filesystem::path& path);
std::vector<Shape> parse_shapes_geojson_text(const std::string& text);

/// Regular grid, row-major with row 0 at the northern edge.
struct RasterGrid {
  int ncols = 0;
  int nrows = 0;
  double xll = 0.0;
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(ncols) +
                  static_cast<std::size_t>(col)];
  }
  bool is_nodata(double v) const { return v != v || v == nodata; }
  Point cell_center(int row, int col) const {
    return {xll + (col + 0.5) * cellsize, yll + (nrows - row - 0.5) * cellsize};
  }
  double xmax() const { return xll + ncols * cellsize; }
  double ymax() const { return yll + nrows * cellsize; }
};

RasterGrid parse_ascii_grid(const std::filesystem::path& path);
RasterGrid parse_ascii_grid(std::istream& in);
void write_ascii_grid(const RasterGrid& grid, std::ostream& out);
void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path);

struct PointValue {
  double lon = 0.0;
  double lat = 0.0;
  double value = 0.0;
};

/// CSV with header lon,lat,value.
std::vector<PointValue> parse_point_csv(const std::filesystem::path& path);
std::vector<PointValue> parse_point_csv(std::istream& in);

/// Dense case counts for every (disease, district, week) cell.
struct SurveillancePanel {
  std::vector<std::string> diseases;
  Date start{};
  int n_weeks = 0;
  std::vector<AdmId> districts;
  std::vector<std::int64_t> counts;  // index (disease, district, week)

  std::size_t cells_per_disease() const {
    return districts.size() * static_cast<std::size_t>(n_weeks);
  }
  std::size_t index(std::size_t disease, std::size_t district, std::size_t week) const {
    return (disease * districts.size() + district) * static_cast<std::size_t>(n_weeks) + week;
  }
  std::int64_t at(std::size_t disease, std::size_t district, std::size_t week) const {
    return counts[index(disease, district, week)];
  }
  Date week_start(std::size_t week) const {
    return start + std::chrono::days{7 * static_cast<long>(week)};
  }
};

struct PanelBuild {
  SurveillancePanel panel;
  std::vector<std::string> unmatched;  // "country/province/district", deduplicated
  std::size_t dropped_unmatched = 0;
  std::size_t dropped_out_of_range = 0;
  Warnings warnings;
};

/// Start date of surveillance week `week` of `year`: Jan 1 plus 7·(week−1) days.
Date surveillance_week_date(int year, int week);

/// Materializes the complete district × week panel for one disease. Cells with
/// no record hold zero cases.
PanelBuild build_panel(const std::vector<SurveillanceRecord>& records,
                       const std::vector<AdminRegion>& districts, Date start, int n_weeks,
                       const std::string& disease);

/// Inverse of build_panel: one record per panel cell.
std::vector<SurveillanceRecord> panel_to_records(const SurveillancePanel& panel,
                                                 const std::vector<AdminRegion>& districts);

/// Cases per district summed over all weeks.
std::vector<double> district_totals(const SurveillancePanel& panel, std::size_t disease = 0);

}  // namespace outbreak
