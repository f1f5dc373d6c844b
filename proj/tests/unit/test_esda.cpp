#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "outbreak/esda.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/synth.hpp"

using namespace outbreak;

namespace {

std::vector<double> random_field(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

oracle::Dense dense(const SpatialWeights& w) {
  oracle::Dense d(w.n, std::vector<double>(w.n, 0.0));
  for (std::size_t i = 0; i < w.n; ++i) {
    for (std::size_t k = 0; k < w.neighbors[i].size(); ++k) d[i][w.neighbors[i][k]] = w.weights[i][k];
  }
  return d;
}

// 20x20 low background with a 3x3 block of high values.
struct PlantedBlock {
  std::vector<AdminRegion> regions = fixture::square_grid(20, 20);
  std::vector<double> x;
  std::vector<std::size_t> block;
  explicit PlantedBlock(std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    x.resize(400);
    for (auto& v : x) v = u(rng);
    for (int r = 8; r < 11; ++r) {
      for (int c = 8; c < 11; ++c) {
        const auto i = static_cast<std::size_t>(r * 20 + c);
        x[i] = 10.0;
        block.push_back(i);
      }
    }
  }
};

}  // namespace

TEST_CASE("two adjacent regions with distinct values give I = -1 exactly") {
  const auto w = build_contiguity_weights(fixture::square_grid(2, 1));
  Rng rng(6);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> x = {u(rng), u(rng)};
    CHECK(moran_statistic(x, w) == -1.0);
    CHECK(oracle::moran(x, dense(w)) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  // Inference needs a third region.
  const std::vector<double> x = {3.0, -1.0};
  CHECK_THROWS_AS(morans_i(x, w), InsufficientRegions);
  const auto w4 = weights_from_neighbors({{1}, {0}, {3}, {2}});
  const std::vector<double> x4 = {3.0, -1.0, 3.0, -1.0};
  CHECK(morans_i(x4, w4, 9).I == -1.0);
}

TEST_CASE("2x2 queen grid with diagonal values gives -1/3") {
  const auto w = build_contiguity_weights(fixture::square_grid(2, 2));
  const std::vector<double> x = {1, 0, 0, 1};
  const auto r = morans_i(x, w, 99);
  CHECK(std::abs(r.I - (-1.0 / 3.0)) <= 1e-12);
  CHECK(std::abs(r.I - oracle::moran(x, dense(w))) <= 1e-12);
  CHECK(r.expected_I == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("global I matches the dense double sum on random lattices") {
  Rng rng(5);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = build_contiguity_weights(synth::lattice_regions(10, 10, 0, 0, 1, 0.2, seed),
                                            seed % 2 ? Contiguity::queen : Contiguity::rook);
    const auto x = random_field(rng, w.n);
    CHECK(std::abs(morans_i(x, w, 19).I - oracle::moran(x, dense(w))) <= 1e-10);
  }
}

TEST_CASE("islands are excluded from the statistic") {
  auto regions = fixture::square_grid(3, 3);
  regions.push_back(fixture::rect_region(50, 10, 10, 11, 11));
  const auto w = build_contiguity_weights(regions);
  std::vector<double> x = {1, 5, 2, 7, 3, 9, 4, 8, 6, 1000};
  const auto r = morans_i(x, w, 99);
  CHECK(r.n_used == 9);
  std::vector<double> x9(x.begin(), x.begin() + 9);
  const auto w9 = build_contiguity_weights(fixture::square_grid(3, 3));
  CHECK(r.I == doctest::Approx(morans_i(x9, w9, 99).I).epsilon(1e-12));
}

TEST_CASE("preconditions") {
  const auto w = build_contiguity_weights(fixture::square_grid(2, 2));
  const std::vector<double> c = {2, 2, 2, 2};
  CHECK_THROWS_AS(morans_i(c, w), ConstantField);
  CHECK_THROWS_AS(lisa(c, w), ConstantField);
  const std::vector<double> x = {1, 2, 3};
  CHECK_THROWS_AS(morans_i(x, w), DimensionMismatch);
  const std::vector<double> ok = {1, 2, 3, 4};
  CHECK_THROWS_AS(morans_i(ok, w, 0), ValidationError);
  CHECK_THROWS_AS(lisa(ok, w, 99, 1, 0.0), ValidationError);
  const auto pair = weights_from_neighbors({{1}, {0}});
  const std::vector<double> two = {1, 2};
  CHECK_THROWS_AS(morans_i(two, pair), InsufficientRegions);
}

TEST_CASE("p-values respect the permutation floor") {
  Rng rng(8);
  const auto w = build_contiguity_weights(synth::lattice_regions(8, 8, 0, 0, 1, 0.1, 4));
  const auto x = random_field(rng, w.n);
  const auto g = morans_i(x, w, 999);
  CHECK(g.p_value >= 1.0 / 1000.0);
  CHECK(g.p_value <= 1.0);
  const auto l = lisa(x, w, 999);
  for (double p : l.p_value) CHECK(p >= 1.0 / 1000.0);
}

TEST_CASE("mean local I equals global I") {
  Rng rng(21);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = build_contiguity_weights(synth::lattice_regions(7, 9, 0, 0, 1, 0.2, seed));
    const auto x = random_field(rng, w.n);
    const auto l = lisa(x, w, 9);
    double sum = 0.0;
    for (double v : l.local_I) sum += v;
    CHECK(std::abs(sum / static_cast<double>(w.n) - morans_i(x, w, 9).I) <= 1e-10);
    const auto naive = oracle::local_moran(x, dense(w));
    for (std::size_t i = 0; i < w.n; ++i) CHECK(std::abs(l.local_I[i] - naive[i]) <= 1e-10);
  }
}

TEST_CASE("quadrants agree with signs") {
  Rng rng(3);
  const auto w = build_contiguity_weights(synth::lattice_regions(10, 10, 0, 0, 1, 0.2, 9));
  const auto x = random_field(rng, w.n);
  const auto l = lisa(x, w, 199, 7, 1.0);
  for (std::size_t i = 0; i < w.n; ++i) {
    switch (l.quadrant[i]) {
      case Quadrant::HH: CHECK((l.z[i] > 0 && l.lag[i] > 0)); break;
      case Quadrant::LL: CHECK((l.z[i] < 0 && l.lag[i] < 0)); break;
      case Quadrant::HL: CHECK((l.z[i] > 0 && l.lag[i] < 0)); break;
      case Quadrant::LH: CHECK((l.z[i] < 0 && l.lag[i] > 0)); break;
      case Quadrant::NS: CHECK((l.z[i] == 0 || l.lag[i] == 0)); break;
      case Quadrant::ISLAND: CHECK(w.is_island(i)); break;
    }
  }
}

TEST_CASE("planted 3x3 block is HH and agrees with a naive permutation test") {
  const PlantedBlock f(17);
  const auto w = build_contiguity_weights(f.regions);
  const auto l = lisa(f.x, w, 999, 12345, 0.05);
  const auto d = dense(w);
  for (std::size_t i : f.block) {
    CHECK(l.quadrant[i] == Quadrant::HH);
    CHECK(oracle::lisa_p(f.x, d, i, 199, 1000 + i) <= 0.05);
  }
  CHECK(l.p_value[8 * 20 + 8 + 21] == 0.001);  // block center
  std::size_t hh = 0;
  for (auto q : l.quadrant) hh += q == Quadrant::HH ? 1 : 0;
  CHECK(hh == f.block.size());
}

TEST_CASE("results are identical across thread counts") {
  Rng rng(12);
  const auto w = build_contiguity_weights(synth::lattice_regions(12, 12, 0, 0, 1, 0.2, 2));
  const auto x = random_field(rng, w.n);
  set_thread_count(1);
  const auto g1 = morans_i(x, w, 499, 77);
  const auto l1 = lisa(x, w, 499, 77);
  set_thread_count(8);
  const auto g8 = morans_i(x, w, 499, 77);
  const auto l8 = lisa(x, w, 499, 77);
  set_thread_count(0);
  CHECK(g1.I == g8.I);
  CHECK(g1.p_value == g8.p_value);
  CHECK(g1.permutation_sd == g8.permutation_sd);
  CHECK(l1.p_value == l8.p_value);
  CHECK(l1.quadrant == l8.quadrant);
}

TEST_CASE("global test is calibrated under an iid null") {
  // Rejection rate at alpha over independent fields stays within 3 standard
  // errors of alpha.
  const auto w = build_contiguity_weights(synth::lattice_regions(8, 8, 0, 0, 1, 0.2, 5));
  Rng rng(2024);
  const int trials = 300;
  const double alpha = 0.05;
  int rejected = 0;
  for (int t = 0; t < trials; ++t) {
    const auto x = random_field(rng, w.n);
    // Two-sided use of a one-sided test: reject if either tail is extreme.
    if (morans_i(x, w, 199, static_cast<std::uint64_t>(t)).p_value <= alpha / 2) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / trials;
  const double se = std::sqrt(alpha * (1 - alpha) / trials);
  CHECK(rate <= alpha + 3 * se);
}

TEST_CASE("quadrant names round-trip") {
  for (auto q : {Quadrant::HH, Quadrant::LL, Quadrant::HL, Quadrant::LH, Quadrant::NS, Quadrant::ISLAND}) {
    CHECK(parse_quadrant(to_string(q)) == q);
  }
}
