#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "outbreak/error.hpp"
#include "outbreak/ingest.hpp"

namespace outbreak {

enum class Contiguity { queen, rook };

Contiguity parse_contiguity(std::string_view name);
const char* to_string(Contiguity kind);

/// Sparse neighbor structure between regions. weights[i] runs parallel to
/// neighbors[i]; neighbor lists are sorted by index.
struct SpatialWeights {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> weights;
  bool standardized = false;
  std::vector<std::size_t> islands;

  bool is_island(std::size_t i) const { return neighbors[i].empty(); }
  /// Sum of all weights.
  double s0() const;
};

/// Binary weights from adjacency lists, symmetrized and row-standardized.
SpatialWeights weights_from_neighbors(std::vector<std::vector<std::size_t>> neighbors);

void row_standardize(SpatialWeights& w);

/// Queen: boundaries come within `tolerance` degrees of each other anywhere.
/// Rook: boundaries share a collinear stretch longer than `tolerance`.
/// Candidate pairs come from a uniform grid over region bounding boxes; the
/// exact boundary test runs only on pairs that share a grid bin.
SpatialWeights build_contiguity_weights(const std::vector<AdminRegion>& regions,
                                        Contiguity kind = Contiguity::queen,
                                        double tolerance = 1e-9, Warnings* warnings = nullptr);

struct SpatialLag {
  std::vector<double> values;
  std::vector<bool> island;
};

/// lag_i = Σ_j w_ij x_j. Islands get 0 and are flagged.
SpatialLag spatial_lag(const SpatialWeights& w, std::span<const double> x);

/// Edge list "i,j,weight" with islands as rows "i,-1,0".
void write_weights_csv(const SpatialWeights& w, std::ostream& out);
void write_weights_csv(const SpatialWeights& w, const std::filesystem::path& path);
SpatialWeights read_weights_csv(std::istream& in, std::size_t n = 0);
SpatialWeights read_weights_csv(const std::filesystem::path& path, std::size_t n = 0);

}  // namespace outbreak
