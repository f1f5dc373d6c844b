#include "outbreak/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "outbreak/csv.hpp"

namespace outbreak {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ScaledColumn minmax_scale(std::span<const double> column) {
  if (column.empty()) throw ValidationError("minmax_scale: empty column");
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  ScaledColumn out;
  out.params.kind = ScalerKind::minmax;
  out.params.center = {*lo};
  out.params.scale = {*hi - *lo};
  out.values = scale_column(out.params, 0, column);
  return out;
}

ScaledColumn robust_scale(std::span<const double> column) {
  if (column.empty()) throw ValidationError("robust_scale: empty column");
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  ScaledColumn out;
  out.params.kind = ScalerKind::robust;
  out.params.center = {quantile_sorted(sorted, 0.5)};
  out.params.scale = {iqr == 0.0 ? 1.0 : iqr};
  out.values = scale_column(out.params, 0, column);
  return out;
}

std::vector<double> scale_column(const ScalerParams& params, std::size_t column,
                                 std::span<const double> values) {
  if (column >= params.center.size()) throw DimensionMismatch("scaler has no such column");
  const double center = params.center[column];
  const double scale = params.scale[column];
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (params.kind == ScalerKind::minmax && scale == 0.0) {
      out[i] = 0.0;
    } else {
      out[i] = (values[i] - center) / scale;
    }
  }
  return out;
}

std::vector<double> unscale_column(const ScalerParams& params, std::size_t column,
                                   std::span<const double> values) {
  if (column >= params.center.size()) throw DimensionMismatch("scaler has no such column");
  const double center = params.center[column];
  const double scale = params.scale[column];
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * scale + center;
  return out;
}

std::vector<double> landcover_composite(std::span<const double> area,
                                        std::span<const double> fraction,
                                        std::span<const double> population) {
  if (area.size() != fraction.size() || area.size() != population.size()) {
    throw DimensionMismatch("landcover_composite: columns differ in length");
  }
  if (area.empty()) return {};
  const auto a = minmax_scale(area).values;
  const auto f = minmax_scale(fraction).values;
  const auto p = minmax_scale(population).values;
  std::vector<double> out(area.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + f[i] + p[i];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

}  // namespace

PointAggregate aggregate_points(const std::vector<PointValue>& points,
                                const std::vector<AdminRegion>& regions) {
  PointAggregate out;
  out.values.assign(regions.size(), 0.0);
  out.fallback.assign(regions.size(), false);
  if (points.empty()) {
    throw ValidationError("aggregate_points: no points to aggregate");
  }
  std::vector<BBox> boxes;
  boxes.reserve(regions.size());
  for (const auto& r : regions) boxes.push_back(bounds(r.geometry));
  std::vector<double> sum(regions.size(), 0.0);
  std::vector<std::size_t> count(regions.size(), 0);
  for (const auto& p : points) {
    const Point q{p.lon, p.lat};
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (boxes[r].contains(q) && contains(regions[r].geometry, q)) {
        sum[r] += p.value;
        ++count[r];
        break;
      }
    }
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (count[r] > 0) {
      out.values[r] = sum[r] / static_cast<double>(count[r]);
      continue;
    }
    const Point c = centroid(regions[r].geometry);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      const double d = haversine_km(c.x, c.y, p.lon, p.lat);
      if (d < best) {
        best = d;
        out.values[r] = p.value;
      }
    }
    out.fallback[r] = true;
    ++out.fallback_count;
  }
  return out;
}

// ---------------------------------------------------------------------------

Cadence parse_cadence(std::string_view text) {
  const std::string t = csv::lower(text);
  if (t == "static") return Cadence::static_value;
  if (t == "yearly") return Cadence::yearly;
  if (t == "weekly") return Cadence::weekly;
  if (t == "daily") return Cadence::daily;
  throw ValidationError("unknown cadence '" + std::string(text) + "'");
}

const char* to_string(Cadence cadence) {
  switch (cadence) {
    case Cadence::static_value: return "static";
    case Cadence::yearly: return "yearly";
    case Cadence::weekly: return "weekly";
    case Cadence::daily: return "daily";
  }
  return "static";
}

Aggregate parse_aggregate(std::string_view text) {
  const std::string t = csv::lower(text);
  if (t == "mean") return Aggregate::mean;
  if (t == "sum") return Aggregate::sum;
  throw ValidationError("unknown aggregate '" + std::string(text) + "'");
}

const char* to_string(Aggregate aggregate) {
  return aggregate == Aggregate::mean ? "mean" : "sum";
}

std::array<double, 12> FeatureRow::predictors() const {
  return {static_cast<double>(week_index), precipitation, temperature, landcover[0],
          landcover[1], landcover[2], landcover[3], landcover[4], population_density,
          population_near_water, relative_wealth, elevation};
}

namespace {

// `obs` sorted by date and non-empty.
double value_in_week(const DistrictSeries& series, std::span<const Observation> obs,
                     Date week_start) {
  const auto by_date = [](const Observation& o, Date d) { return o.date < d; };
  switch (series.cadence) {
    case Cadence::static_value:
      return obs.front().value;
    case Cadence::yearly: {
      const int year = year_of(week_start);
      const Observation* best = nullptr;
      int best_gap = 0;
      for (const auto& o : obs) {
        const int gap = std::abs(year_of(o.date) - year);
        if (best == nullptr || gap < best_gap) {
          best = &o;
          best_gap = gap;
        }
      }
      return best->value;
    }
    case Cadence::weekly:
    case Cadence::daily: {
      const Date week_end = week_start + std::chrono::days{7};
      const auto first = std::lower_bound(obs.begin(), obs.end(), week_start, by_date);
      const auto last = std::lower_bound(first, obs.end(), week_end, by_date);
      if (first != last) {
        double total = 0.0;
        for (auto it = first; it != last; ++it) total += it->value;
        return series.aggregate == Aggregate::sum
                   ? total
                   : total / static_cast<double>(last - first);
      }
      if (first == obs.end()) return obs.back().value;
      if (first == obs.begin()) return first->value;
      const auto before = std::prev(first);
      return days_between(before->date, week_start) <= days_between(week_start, first->date)
                 ? before->value
                 : first->value;
    }
  }
  return obs.front().value;
}

}  // namespace

double series_value(const DistrictSeries& series, AdmId adm_id, Date week_start) {
  const auto it = series.by_district.find(adm_id);
  if (it == series.by_district.end() || it->second.empty()) {
    throw ValidationError("dataset '" + series.name + "' has no value for adm_id " +
                          std::to_string(adm_id));
  }
  std::vector<Observation> obs = it->second;
  std::stable_sort(obs.begin(), obs.end(),
                   [](const Observation& a, const Observation& b) { return a.date < b.date; });
  return value_in_week(series, obs, week_start);
}

std::vector<FeatureRow> assemble_feature_table(const SurveillancePanel& panel,
                                               const FeatureInputs& inputs) {
  if (panel.diseases.empty()) throw ValidationError("panel has no disease");
  std::vector<const DistrictSeries*> all = {&inputs.precipitation, &inputs.temperature};
  for (const auto& lc : inputs.landcover) all.push_back(&lc);
  all.push_back(&inputs.population_density);
  all.push_back(&inputs.population_near_water);
  all.push_back(&inputs.relative_wealth);
  all.push_back(&inputs.elevation);

  const std::size_t n_weeks = static_cast<std::size_t>(panel.n_weeks);
  std::vector<FeatureRow> rows(panel.cells_per_disease());
  std::vector<Observation> obs;
  for (std::size_t d = 0; d < panel.districts.size(); ++d) {
    const AdmId id = panel.districts[d];
    for (std::size_t s = 0; s < all.size(); ++s) {
      const DistrictSeries& series = *all[s];
      const auto it = series.by_district.find(id);
      if (it == series.by_district.end() || it->second.empty()) {
        throw ValidationError("dataset '" + series.name + "' has no value for adm_id " +
                              std::to_string(id));
      }
      obs = it->second;
      std::stable_sort(obs.begin(), obs.end(),
                       [](const Observation& a, const Observation& b) { return a.date < b.date; });
      for (std::size_t w = 0; w < n_weeks; ++w) {
        FeatureRow& row = rows[d * n_weeks + w];
        const double v = value_in_week(series, obs, panel.week_start(w));
        if (s == 0) {
          row.precipitation = v;
        } else if (s == 1) {
          row.temperature = v;
        } else if (s < 7) {
          row.landcover[s - 2] = v;
        } else if (s == 7) {
          row.population_density = v;
        } else if (s == 8) {
          row.population_near_water = v;
        } else if (s == 9) {
          row.relative_wealth = v;
        } else {
          row.elevation = v;
        }
      }
    }
    for (std::size_t w = 0; w < n_weeks; ++w) {
      FeatureRow& row = rows[d * n_weeks + w];
      row.adm_id = id;
      row.week_index = static_cast<int>(w) + 1;
      row.week_start = panel.week_start(w);
      row.raw_cases = panel.at(0, d, w);
      row.label = row.raw_cases >= 1 ? 1 : 0;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kFeatureHeader =
    "id,adm_id,week_start,week,precipitation,temperature,trees,crops,built_up,bare_ground,"
    "rangeland,population_density,population_near_water,relative_wealth,elevation,"
    "total_cases,label";

}  // namespace

void write_feature_csv(const std::vector<FeatureRow>& rows, std::ostream& out) {
  out << kFeatureHeader << '\n';
  std::string line;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    line.clear();
    line += std::to_string(i + 1);
    line += ',';
    line += std::to_string(r.adm_id);
    line += ',';
    line += format_date(r.week_start);
    const auto p = r.predictors();
    line += ',';
    line += std::to_string(r.week_index);
    for (std::size_t k = 1; k < p.size(); ++k) {
      line += ',';
      line += csv::format_double(p[k]);
    }
    line += ',';
    line += std::to_string(r.raw_cases);
    line += ',';
    line += std::to_string(r.label);
    line += '\n';
    out << line;
  }
}

void write_feature_csv(const std::vector<FeatureRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_feature_csv(rows, out);
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kFeatureHeader) {
    throw ParseError("feature CSV header does not match the expected schema");
  }
  std::vector<FeatureRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 17) {
      throw ParseError("feature CSV line " + std::to_string(line_no) + ": expected 17 fields");
    }
    try {
      FeatureRow r;
      r.adm_id = csv::parse_int(f[1]);
      r.week_start = parse_date(f[2]);
      r.week_index = static_cast<int>(csv::parse_int(f[3]));
      r.precipitation = csv::parse_double(f[4]);
      r.temperature = csv::parse_double(f[5]);
      for (std::size_t k = 0; k < 5; ++k) r.landcover[k] = csv::parse_double(f[6 + k]);
      r.population_density = csv::parse_double(f[11]);
      r.population_near_water = csv::parse_double(f[12]);
      r.relative_wealth = csv::parse_double(f[13]);
      r.elevation = csv::parse_double(f[14]);
      r.raw_cases = csv::parse_int(f[15]);
      r.label = static_cast<int>(csv::parse_int(f[16]));
      rows.push_back(r);
    } catch (const ParseError& e) {
      throw ParseError("feature CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_feature_csv(in);
}

}  // namespace outbreak
