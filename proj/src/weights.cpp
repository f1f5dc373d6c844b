#include "outbreak/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "outbreak/csv.hpp"
#include "outbreak/parallel.hpp"

namespace outbreak {

Contiguity parse_contiguity(std::string_view name) {
  const std::string n = csv::lower(name);
  if (n == "queen") return Contiguity::queen;
  if (n == "rook") return Contiguity::rook;
  throw ValidationError("unknown contiguity kind '" + std::string(name) + "'");
}

const char* to_string(Contiguity kind) { return kind == Contiguity::queen ? "queen" : "rook"; }

double SpatialWeights::s0() const {
  double total = 0.0;
  for (const auto& row : weights) {
    for (double v : row) total += v;
  }
  return total;
}

void row_standardize(SpatialWeights& w) {
  for (auto& row : w.weights) {
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum == 0.0) continue;
    for (double& v : row) v /= sum;
  }
  w.standardized = true;
}

SpatialWeights weights_from_neighbors(std::vector<std::vector<std::size_t>> neighbors) {
  const std::size_t n = neighbors.size();
  std::vector<std::vector<std::size_t>> sym(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : neighbors[i]) {
      if (j >= n) throw ValidationError("neighbor index out of range");
      if (j == i) continue;
      sym[i].push_back(j);
      sym[j].push_back(i);
    }
  }
  SpatialWeights w;
  w.n = n;
  w.neighbors.resize(n);
  w.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = sym[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    w.neighbors[i] = row;
    w.weights[i].assign(row.size(), 1.0);
    if (row.empty()) w.islands.push_back(i);
  }
  row_standardize(w);
  return w;
}

namespace {

struct Segment {
  Point a;
  Point b;
  BBox box;
};

std::vector<Segment> boundary_segments(const MultiPolygon& shape) {
  std::vector<Segment> segments;
  for (const auto& part : shape.parts) {
    for (const auto& ring : part.rings) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        Segment s{ring[i], ring[i + 1], {}};
        s.box.extend(s.a);
        s.box.extend(s.b);
        segments.push_back(s);
      }
    }
  }
  return segments;
}

bool boundaries_touch(const std::vector<Segment>& lhs, const BBox& lhs_box,
                      const std::vector<Segment>& rhs, const BBox& rhs_box, Contiguity kind,
                      double tolerance) {
  const BBox window_l = rhs_box.inflated(tolerance);
  const BBox window_r = lhs_box.inflated(tolerance);
  for (const auto& s : lhs) {
    if (!s.box.intersects(window_l)) continue;
    const BBox reach = s.box.inflated(tolerance);
    for (const auto& t : rhs) {
      if (!t.box.intersects(window_r) || !t.box.intersects(reach)) continue;
      if (kind == Contiguity::queen) {
        if (segment_distance(s.a, s.b, t.a, t.b) <= tolerance) return true;
      } else if (std::max(collinear_overlap(s.a, s.b, t.a, t.b, tolerance),
                          collinear_overlap(t.a, t.b, s.a, s.b, tolerance)) > tolerance) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

SpatialWeights build_contiguity_weights(const std::vector<AdminRegion>& regions, Contiguity kind,
                                        double tolerance, Warnings* warnings) {
  if (regions.empty()) throw ValidationError("build_contiguity_weights: no regions");
  if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be non-negative");
  const std::size_t n = regions.size();

  std::vector<std::vector<Segment>> segments(n);
  std::vector<BBox> boxes(n);
  BBox extent;
  double mean_span = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    segments[i] = boundary_segments(regions[i].geometry);
    boxes[i] = bounds(regions[i].geometry);
    extent.extend(boxes[i]);
    mean_span += std::max(boxes[i].max_x - boxes[i].min_x, boxes[i].max_y - boxes[i].min_y);
  }
  mean_span /= static_cast<double>(n);

  // Uniform bins about one mean region across.
  const double width = std::max(extent.max_x - extent.min_x, 1e-12);
  const double height = std::max(extent.max_y - extent.min_y, 1e-12);
  const double bin = std::max(mean_span, 1e-12);
  const auto nx = static_cast<std::size_t>(std::clamp(std::ceil(width / bin), 1.0, 4096.0));
  const auto ny = static_cast<std::size_t>(std::clamp(std::ceil(height / bin), 1.0, 4096.0));
  const auto bin_x = [&](double x) {
    const double f = (x - extent.min_x) / width * static_cast<double>(nx);
    return static_cast<std::size_t>(std::clamp(std::floor(f), 0.0, static_cast<double>(nx - 1)));
  };
  const auto bin_y = [&](double y) {
    const double f = (y - extent.min_y) / height * static_cast<double>(ny);
    return static_cast<std::size_t>(std::clamp(std::floor(f), 0.0, static_cast<double>(ny - 1)));
  };
  std::vector<std::vector<std::size_t>> bins(nx * ny);
  for (std::size_t i = 0; i < n; ++i) {
    const BBox box = boxes[i].inflated(tolerance);
    for (std::size_t by = bin_y(box.min_y); by <= bin_y(box.max_y); ++by) {
      for (std::size_t bx = bin_x(box.min_x); bx <= bin_x(box.max_x); ++bx) {
        bins[by * nx + bx].push_back(i);
      }
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (const auto& members : bins) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const std::size_t i = std::min(members[a], members[b]);
        const std::size_t j = std::max(members[a], members[b]);
        if (boxes[i].inflated(tolerance).intersects(boxes[j])) candidates.emplace_back(i, j);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<char> adjacent(candidates.size(), 0);
  parallel_for(candidates.size(), [&](std::size_t k) {
    const auto [i, j] = candidates[k];
    adjacent[k] = boundaries_touch(segments[i], boxes[i], segments[j], boxes[j], kind, tolerance)
                      ? 1
                      : 0;
  });

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (adjacent[k] != 0) neighbors[candidates[k].first].push_back(candidates[k].second);
  }
  SpatialWeights w = weights_from_neighbors(std::move(neighbors));
  if (w.islands.size() == n) {
    warn(warnings, "no two regions share a boundary within tolerance; every region is an island");
  } else if (!w.islands.empty()) {
    warn(warnings, std::to_string(w.islands.size()) + " island region(s) without neighbors");
  }
  return w;
}

SpatialLag spatial_lag(const SpatialWeights& w, std::span<const double> x) {
  if (x.size() != w.n) {
    throw DimensionMismatch("spatial_lag: vector length " + std::to_string(x.size()) +
                            " does not match " + std::to_string(w.n) + " regions");
  }
  SpatialLag lag;
  lag.values.assign(w.n, 0.0);
  lag.island.assign(w.n, false);
  for (std::size_t i = 0; i < w.n; ++i) {
    if (w.is_island(i)) {
      lag.island[i] = true;
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < w.neighbors[i].size(); ++k) {
      sum += w.weights[i][k] * x[w.neighbors[i][k]];
    }
    lag.values[i] = sum;
  }
  return lag;
}

void write_weights_csv(const SpatialWeights& w, std::ostream& out) {
  out << "i,j,weight\n";
  for (std::size_t i = 0; i < w.n; ++i) {
    if (w.is_island(i)) {
      out << i << ",-1,0\n";
      continue;
    }
    for (std::size_t k = 0; k < w.neighbors[i].size(); ++k) {
      out << i << ',' << w.neighbors[i][k] << ',' << csv::format_double(w.weights[i][k]) << '\n';
    }
  }
}

void write_weights_csv(const SpatialWeights& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_weights_csv(w, out);
}

SpatialWeights read_weights_csv(std::istream& in, std::size_t n) {
  std::string line;
  if (!std::getline(in, line) || csv::lower(csv::trim(line)) != "i,j,weight") {
    throw ParseError("weights CSV must start with header i,j,weight");
  }
  struct Edge {
    std::size_t i;
    long long j;
    double weight;
  };
  std::vector<Edge> edges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 3) throw ParseError("weights CSV line " + std::to_string(line_no));
    const long long i = csv::parse_int(f[0]);
    const long long j = csv::parse_int(f[1]);
    if (i < 0 || j < -1) throw ParseError("weights CSV line " + std::to_string(line_no));
    edges.push_back({static_cast<std::size_t>(i), j, csv::parse_double(f[2])});
    n = std::max<std::size_t>(n, static_cast<std::size_t>(i) + 1);
    if (j >= 0) n = std::max<std::size_t>(n, static_cast<std::size_t>(j) + 1);
  }
  SpatialWeights w;
  w.n = n;
  w.neighbors.resize(n);
  w.weights.resize(n);
  for (const auto& e : edges) {
    if (e.j < 0) continue;
    w.neighbors[e.i].push_back(static_cast<std::size_t>(e.j));
    w.weights[e.i].push_back(e.weight);
  }
  w.standardized = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (w.neighbors[i].empty()) {
      w.islands.push_back(i);
      continue;
    }
    double sum = 0.0;
    for (double v : w.weights[i]) sum += v;
    if (std::abs(sum - 1.0) > 1e-12) w.standardized = false;
  }
  return w;
}

SpatialWeights read_weights_csv(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_weights_csv(in, n);
}

}  // namespace outbreak
