#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "outbreak/error.hpp"
#include "outbreak/ingest.hpp"

namespace outbreak {

// ---------------------------------------------------------------------------
// Scalers

enum class ScalerKind { minmax, robust };

/// Per-column statistics. minmax: center = min, scale = max − min (0 for a
/// constant column). robust: center = median, scale = IQR (1 when IQR = 0).
struct ScalerParams {
  ScalerKind kind = ScalerKind::robust;
  std::vector<double> center;
  std::vector<double> scale;
};

struct ScaledColumn {
  std::vector<double> values;
  ScalerParams params;  // one column
};

/// (x − min)/(max − min); a constant column maps to zeros.
ScaledColumn minmax_scale(std::span<const double> column);

/// (x − median)/IQR with quartiles interpolated linearly between order
/// statistics at position q·(n − 1). IQR = 0 only centers.
ScaledColumn robust_scale(std::span<const double> column);

/// Quantile by linear interpolation over the sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Applies column `column` of fitted params; never refits.
std::vector<double> scale_column(const ScalerParams& params, std::size_t column,
                                 std::span<const double> values);
std::vector<double> unscale_column(const ScalerParams& params, std::size_t column,
                                   std::span<const double> values);

/// minmax(area) + minmax(fraction) + minmax(population), element-wise; lies
/// in [0, 3].
std::vector<double> landcover_composite(std::span<const double> area,
                                        std::span<const double> fraction,
                                        std::span<const double> population);

// ---------------------------------------------------------------------------
// Point aggregation

struct PointAggregate {
  std::vector<double> values;      // per region
  std::vector<bool> fallback;      // true when no point fell inside
  std::size_t fallback_count = 0;
};

/// Mean of the points inside each region. A region without points takes the
/// value of the point nearest (great-circle) to its centroid.
PointAggregate aggregate_points(const std::vector<PointValue>& points,
                                const std::vector<AdminRegion>& regions);

// ---------------------------------------------------------------------------
// Feature table

enum class Cadence { static_value, yearly, weekly, daily };
enum class Aggregate { mean, sum };

Cadence parse_cadence(std::string_view text);
const char* to_string(Cadence cadence);
Aggregate parse_aggregate(std::string_view text);
const char* to_string(Aggregate aggregate);

struct Observation {
  Date date{};
  double value = 0.0;
};

/// One district-level input dataset over time.
///
/// static_value: the first observation is broadcast to every week.
/// yearly: the observation dated in the week's year; otherwise the nearest
///   available year (earlier year on a tie).
/// weekly / daily: observations dated inside the week are combined with
///   `aggregate`; a week without observations takes the observation closest
///   in time to the week start (earlier on a tie).
struct DistrictSeries {
  std::string name;
  Cadence cadence = Cadence::static_value;
  Aggregate aggregate = Aggregate::mean;
  std::map<AdmId, std::vector<Observation>> by_district;
};

/// The twelve model predictors, in export order.
inline constexpr std::array<const char*, 12> kPredictorNames = {
    "week",           "precipitation", "temperature",        "trees",
    "crops",          "built_up",      "bare_ground",        "rangeland",
    "population_density", "population_near_water", "relative_wealth", "elevation"};

struct FeatureRow {
  AdmId adm_id = 0;
  int week_index = 0;  // 1-based serial week
  Date week_start{};
  double precipitation = 0.0;
  double temperature = 0.0;
  std::array<double, 5> landcover{};  // trees, crops, built_up, bare_ground, rangeland
  double population_density = 0.0;
  double population_near_water = 0.0;
  double relative_wealth = 0.0;
  double elevation = 0.0;
  int label = 0;
  std::int64_t raw_cases = 0;

  std::array<double, 12> predictors() const;
};

struct FeatureInputs {
  DistrictSeries precipitation;
  DistrictSeries temperature;
  std::array<DistrictSeries, 5> landcover;  // composites per class
  DistrictSeries population_density;
  DistrictSeries population_near_water;
  DistrictSeries relative_wealth;
  DistrictSeries elevation;
};

/// One row per (district, week) cell of the panel's first disease, ordered
/// by panel district order then week. label = 1 iff cases ≥ 1. Throws
/// ValidationError naming the dataset and adm_id when a district has no
/// observations in some dataset.
std::vector<FeatureRow> assemble_feature_table(const SurveillancePanel& panel,
                                               const FeatureInputs& inputs);

/// Value of `series` for `adm_id` during the week starting at `week_start`.
double series_value(const DistrictSeries& series, AdmId adm_id, Date week_start);

void write_feature_csv(const std::vector<FeatureRow>& rows, std::ostream& out);
void write_feature_csv(const std::vector<FeatureRow>& rows, const std::filesystem::path& path);
std::vector<FeatureRow> read_feature_csv(std::istream& in);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

}  // namespace outbreak
