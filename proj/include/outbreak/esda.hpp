#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "outbreak/weights.hpp"

namespace outbreak {

struct GlobalMoranResult {
  double I = 0.0;
  double expected_I = 0.0;  // −1/(n_used − 1)
  double p_value = 1.0;
  int n_permutations = 0;
  std::size_t n_used = 0;  // non-island regions
  double permutation_mean = 0.0;
  double permutation_sd = 0.0;
};

/// Global Moran's I over the non-island regions,
///   I = (n / S0) · Σ_i Σ_j w_ij z_i z_j / Σ_i z_i²,
/// with a one-sided permutation pseudo p-value (M + 1) / (n_perm + 1), M
/// counting permuted statistics at least as extreme in the observed
/// direction of departure from E[I]. Permutation k shuffles the values with
/// an engine seeded by `seed ^ k`.
///
/// Throws InsufficientRegions when fewer than 3 regions have neighbors and
/// ConstantField when x does not vary over them.
GlobalMoranResult morans_i(std::span<const double> x, const SpatialWeights& w, int n_perm = 999,
                           std::uint64_t seed = 12345);

/// The statistic alone, without inference; needs only 2 non-island regions.
double moran_statistic(std::span<const double> x, const SpatialWeights& w);

enum class Quadrant { HH, LL, HL, LH, NS, ISLAND };

const char* to_string(Quadrant q);
Quadrant parse_quadrant(std::string_view text);

struct LisaResult {
  std::vector<double> local_I;  // NaN for islands
  std::vector<double> p_value;  // NaN for islands
  std::vector<double> z;        // x_i − mean over non-island regions
  std::vector<double> lag;      // spatial lag of z
  std::vector<Quadrant> quadrant;
  double alpha = 0.05;
  int n_permutations = 0;
};

/// Local Moran I_i = (z_i / m2) · Σ_j w_ij z_j with m2 = Σ z_k² / n, and a
/// conditional permutation p-value: z_i stays in place while its |N(i)|
/// neighbor values are drawn without replacement from the other non-island
/// regions. Region i draws from an engine seeded by `seed ^ i`.
///
/// Significant regions (p ≤ alpha) are labelled by the signs of z_i and its
/// lag; everything else is NS. alpha = 1 disables the filter.
LisaResult lisa(std::span<const double> x, const SpatialWeights& w, int n_perm = 999,
                std::uint64_t seed = 12345, double alpha = 0.05);

}  // namespace outbreak
