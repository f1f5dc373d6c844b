#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "outbreak/error.hpp"
#include "outbreak/ingest.hpp"

namespace outbreak {

/// Owner region of every grid cell (−1 when no region contains the cell
/// center). A cell whose center lies inside several regions goes to the
/// first of them in input order and is counted in `boundary_ties`.
struct CellAssignment {
  std::vector<std::int32_t> owner;
  std::size_t boundary_ties = 0;
};

CellAssignment assign_cells(const RasterGrid& grid, const std::vector<AdminRegion>& regions);

struct ZonalValue {
  AdmId adm_id = 0;
  std::optional<double> mean;  // empty iff cell_count == 0
  double sum = 0.0;
  std::size_t cell_count = 0;    // valid cells
  std::size_t nodata_count = 0;  // footprint cells holding nodata
};

std::vector<ZonalValue> zonal_mean(const RasterGrid& raster, const std::vector<AdminRegion>& regions,
                                   Warnings* warnings = nullptr);
/// Same, reusing a precomputed assignment for `raster`'s grid.
std::vector<ZonalValue> zonal_mean(const RasterGrid& raster, const std::vector<AdminRegion>& regions,
                                   const CellAssignment& cells, Warnings* warnings = nullptr);

struct AreaTabulation {
  AdmId adm_id = 0;
  std::vector<int> classes;
  std::vector<std::size_t> counts;  // parallel to classes
  std::vector<double> fractions;    // counts / covered
  std::size_t other = 0;            // covered cells of classes not requested
  std::size_t covered = 0;          // non-nodata footprint cells
};

/// Per-region cell counts of each requested integer class code. Throws
/// ValidationError if a non-nodata cell holds a non-integer value.
std::vector<AreaTabulation> tabulate_area(const RasterGrid& classes_raster,
                                          const std::vector<AdminRegion>& regions,
                                          const std::vector<int>& classes,
                                          Warnings* warnings = nullptr);

/// Cells of `grid` whose centers lie within `buffer_km` of any shape.
/// Kilometers become degrees per shape at its centroid latitude:
/// Δlat = km / 110.574, Δlon = km / (111.320 · cos lat).
std::vector<std::uint8_t> buffer_mask(const RasterGrid& grid, const std::vector<Shape>& shapes,
                                      double buffer_km);

struct RegionValue {
  AdmId adm_id = 0;
  double value = 0.0;
};

struct WaterPopulation {
  std::vector<RegionValue> per_region;
  RasterGrid masked;  // population inside the buffer, 0 outside
};

WaterPopulation population_near_water(const RasterGrid& population,
                                      const std::vector<Shape>& water, double buffer_km,
                                      const std::vector<AdminRegion>& regions,
                                      Warnings* warnings = nullptr);

/// Sum of population cells whose center falls on a cell of `class_code` in
/// `classes_raster` (point lookup, no resampling), per region.
std::vector<RegionValue> population_in_class(const RasterGrid& population,
                                             const RasterGrid& classes_raster, int class_code,
                                             const std::vector<AdminRegion>& regions);

}  // namespace outbreak
