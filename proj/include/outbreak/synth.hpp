#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "outbreak/ingest.hpp"

namespace outbreak::synth {

/// Quadrilateral districts on a cols × rows lattice of `size`-degree cells
/// with the south-west corner at (x0, y0). Interior lattice vertices move by
/// up to `jitter`·size in each axis, shared by all four incident districts,
/// so borders stay gap-free. adm_id = first_id + row·cols + col, row 0 south.
std::vector<AdminRegion> lattice_regions(int cols, int rows, double x0, double y0, double size,
                                         double jitter, std::uint64_t seed,
                                         AdmId first_id = 1);

std::string regions_to_geojson(const std::vector<AdminRegion>& regions);

struct MiniRegionSpec {
  int cols = 12;
  int rows = 10;
  int cells_per_district = 10;  // raster cells along a district side
  int n_weeks = 52;
  double district_deg = 0.5;
  double lon0 = 29.0;
  double lat0 = -4.5;
  std::uint64_t seed = 2024;
  std::string disease = "Cholera";
};

/// Writes a complete input set (surveillance CSV, districts, water, wealth
/// points, rasters) and a config.json into `dir`. Returns the config path.
std::filesystem::path write_mini_region(const std::filesystem::path& dir,
                                        const MiniRegionSpec& spec = {});

}  // namespace outbreak::synth
