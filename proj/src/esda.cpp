#include "outbreak/esda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "outbreak/parallel.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

const char* to_string(Quadrant q) {
  switch (q) {
    case Quadrant::HH: return "HH";
    case Quadrant::LL: return "LL";
    case Quadrant::HL: return "HL";
    case Quadrant::LH: return "LH";
    case Quadrant::NS: return "NS";
    case Quadrant::ISLAND: return "ISLAND";
  }
  return "NS";
}

Quadrant parse_quadrant(std::string_view text) {
  for (Quadrant q : {Quadrant::HH, Quadrant::LL, Quadrant::HL, Quadrant::LH, Quadrant::NS,
                     Quadrant::ISLAND}) {
    if (text == to_string(q)) return q;
  }
  throw ParseError("unknown quadrant '" + std::string(text) + "'");
}

namespace {

// Deviations from the mean over non-island regions. Sums run in long double
// so that symmetric configurations (two regions, checkerboards) come out
// exact after rounding back to double.
struct Centered {
  std::vector<std::size_t> used;
  std::vector<double> z;  // full length; zero at islands
  long double sum_sq = 0.0L;
};

Centered center(std::span<const double> x, const SpatialWeights& w, int n_perm,
                std::size_t min_regions = 3) {
  if (x.size() != w.n) {
    throw DimensionMismatch("vector length " + std::to_string(x.size()) + " does not match " +
                            std::to_string(w.n) + " regions");
  }
  if (n_perm < 1) throw ValidationError("n_perm must be at least 1");
  Centered c;
  for (std::size_t i = 0; i < w.n; ++i) {
    if (!w.is_island(i)) c.used.push_back(i);
  }
  if (c.used.size() < min_regions) {
    throw InsufficientRegions("autocorrelation needs at least " + std::to_string(min_regions) +
                              " non-island regions, found " +
                              std::to_string(c.used.size()));
  }
  long double sum = 0.0L;
  for (std::size_t i : c.used) {
    if (!std::isfinite(x[i])) throw ValidationError("non-finite value at region " + std::to_string(i));
    sum += x[i];
  }
  const bool constant = std::all_of(c.used.begin(), c.used.end(),
                                    [&](std::size_t i) { return x[i] == x[c.used.front()]; });
  if (constant) throw ConstantField("values are constant over the non-island regions");
  const long double mean = sum / static_cast<long double>(c.used.size());
  c.z.assign(w.n, 0.0);
  for (std::size_t i : c.used) {
    c.z[i] = static_cast<double>(static_cast<long double>(x[i]) - mean);
    c.sum_sq += static_cast<long double>(c.z[i]) * c.z[i];
  }
  if (c.sum_sq == 0.0L) throw ConstantField("values have zero variance");
  return c;
}

long double cross_product(const SpatialWeights& w, const std::vector<std::size_t>& used,
                          const std::vector<double>& z) {
  long double total = 0.0L;
  for (std::size_t i : used) {
    long double lag = 0.0L;
    const auto& nb = w.neighbors[i];
    const auto& wt = w.weights[i];
    for (std::size_t k = 0; k < nb.size(); ++k) lag += static_cast<long double>(wt[k]) * z[nb[k]];
    total += static_cast<long double>(z[i]) * lag;
  }
  return total;
}

long double weight_sum(const SpatialWeights& w, const std::vector<std::size_t>& used) {
  long double s0 = 0.0L;
  for (std::size_t i : used) {
    for (double v : w.weights[i]) s0 += v;
  }
  return s0;
}

}  // namespace

double moran_statistic(std::span<const double> x, const SpatialWeights& w) {
  const Centered c = center(x, w, 1, 2);
  const auto n = static_cast<long double>(c.used.size());
  return static_cast<double>(n / weight_sum(w, c.used) * cross_product(w, c.used, c.z) / c.sum_sq);
}

GlobalMoranResult morans_i(std::span<const double> x, const SpatialWeights& w, int n_perm,
                           std::uint64_t seed) {
  const Centered c = center(x, w, n_perm);
  const auto n = static_cast<long double>(c.used.size());
  const long double scale = n / weight_sum(w, c.used);

  GlobalMoranResult result;
  result.n_used = c.used.size();
  result.n_permutations = n_perm;
  result.expected_I = -1.0 / (static_cast<double>(c.used.size()) - 1.0);
  result.I = static_cast<double>(scale * cross_product(w, c.used, c.z) / c.sum_sq);

  std::vector<double> simulated(static_cast<std::size_t>(n_perm));
  parallel_for(simulated.size(), [&](std::size_t k) {
    Rng rng = make_stream(seed, k);
    std::vector<double> values(c.used.size());
    for (std::size_t m = 0; m < c.used.size(); ++m) values[m] = c.z[c.used[m]];
    std::shuffle(values.begin(), values.end(), rng);
    std::vector<double> permuted(w.n, 0.0);
    for (std::size_t m = 0; m < c.used.size(); ++m) permuted[c.used[m]] = values[m];
    simulated[k] = static_cast<double>(scale * cross_product(w, c.used, permuted) / c.sum_sq);
  });

  const bool upper = result.I >= result.expected_I;
  std::size_t extreme = 0;
  double mean = 0.0;
  for (double s : simulated) {
    if (upper ? s >= result.I : s <= result.I) ++extreme;
    mean += s;
  }
  mean /= static_cast<double>(simulated.size());
  double var = 0.0;
  for (double s : simulated) var += (s - mean) * (s - mean);
  result.permutation_mean = mean;
  result.permutation_sd =
      simulated.size() > 1 ? std::sqrt(var / static_cast<double>(simulated.size() - 1)) : 0.0;
  result.p_value = static_cast<double>(extreme + 1) / static_cast<double>(n_perm + 1);
  return result;
}

LisaResult lisa(std::span<const double> x, const SpatialWeights& w, int n_perm,
                std::uint64_t seed, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  const Centered c = center(x, w, n_perm);
  const long double m2 = c.sum_sq / static_cast<long double>(c.used.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  LisaResult result;
  result.alpha = alpha;
  result.n_permutations = n_perm;
  result.z = c.z;
  result.lag.assign(w.n, 0.0);
  result.local_I.assign(w.n, nan);
  result.p_value.assign(w.n, nan);
  result.quadrant.assign(w.n, Quadrant::ISLAND);

  for (std::size_t i : c.used) {
    long double lag = 0.0L;
    for (std::size_t k = 0; k < w.neighbors[i].size(); ++k) {
      lag += static_cast<long double>(w.weights[i][k]) * c.z[w.neighbors[i][k]];
    }
    result.lag[i] = static_cast<double>(lag);
    result.local_I[i] = static_cast<double>(c.z[i] / m2 * lag);
  }

  parallel_for(c.used.size(), [&](std::size_t u) {
    const std::size_t i = c.used[u];
    std::vector<double> pool;
    pool.reserve(c.used.size() - 1);
    for (std::size_t j : c.used) {
      if (j != i) pool.push_back(c.z[j]);
    }
    const auto& wt = w.weights[i];
    const std::size_t k_i = wt.size();
    const long double factor = c.z[i] / m2;
    const double observed = result.local_I[i];
    const bool upper = observed >= 0.0;
    Rng rng = make_stream(seed, i);
    std::size_t extreme = 0;
    for (int p = 0; p < n_perm; ++p) {
      long double lag = 0.0L;
      for (std::size_t m = 0; m < k_i; ++m) {
        std::uniform_int_distribution<std::size_t> pick(m, pool.size() - 1);
        std::swap(pool[m], pool[pick(rng)]);
        lag += static_cast<long double>(wt[m]) * pool[m];
      }
      const double simulated = static_cast<double>(factor * lag);
      if (upper ? simulated >= observed : simulated <= observed) ++extreme;
    }
    result.p_value[i] = static_cast<double>(extreme + 1) / static_cast<double>(n_perm + 1);

    const double z = c.z[i];
    const double lag = result.lag[i];
    Quadrant q = Quadrant::NS;
    if (result.p_value[i] <= alpha && z != 0.0 && lag != 0.0) {
      if (z > 0.0) {
        q = lag > 0.0 ? Quadrant::HH : Quadrant::HL;
      } else {
        q = lag < 0.0 ? Quadrant::LL : Quadrant::LH;
      }
    }
    result.quadrant[i] = q;
  });
  return result;
}

}  // namespace outbreak
