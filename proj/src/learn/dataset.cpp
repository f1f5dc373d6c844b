#include <algorithm>
#include <cmath>
#include <numeric>

#include "outbreak/csv.hpp"
#include "outbreak/learn.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

void Dataset::append(std::span<const double> features, int label) {
  if (features.size() != cols()) throw DimensionMismatch("row width does not match dataset");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.x.reserve(indices.size() * cols());
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(y[i]);
  }
  return out;
}

std::vector<double> Dataset::column(std::size_t col) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, col);
  return out;
}

Dataset dataset_from_features(const std::vector<FeatureRow>& rows) {
  Dataset data;
  data.feature_names.assign(kPredictorNames.begin(), kPredictorNames.end());
  data.x.reserve(rows.size() * kPredictorNames.size());
  data.y.reserve(rows.size());
  for (const auto& r : rows) {
    const auto p = r.predictors();
    data.x.insert(data.x.end(), p.begin(), p.end());
    data.y.push_back(r.label);
  }
  return data;
}

ScalerParams fit_scaler(ScalerKind kind, const Dataset& data) {
  if (data.rows() == 0) throw ValidationError("cannot fit a scaler on an empty dataset");
  ScalerParams params;
  params.kind = kind;
  for (std::size_t c = 0; c < data.cols(); ++c) {
    const auto col = data.column(c);
    const auto fitted = kind == ScalerKind::robust ? robust_scale(col) : minmax_scale(col);
    params.center.push_back(fitted.params.center[0]);
    params.scale.push_back(fitted.params.scale[0]);
  }
  return params;
}

void apply_scaler(const ScalerParams& params, Dataset& data) {
  if (params.center.size() != data.cols()) {
    throw SchemaMismatch("scaler fitted on " + std::to_string(params.center.size()) +
                         " columns, data has " + std::to_string(data.cols()));
  }
  for (std::size_t c = 0; c < data.cols(); ++c) {
    const auto scaled = scale_column(params, c, data.column(c));
    for (std::size_t i = 0; i < data.rows(); ++i) data.x[i * data.cols() + c] = scaled[i];
  }
}

// ---------------------------------------------------------------------------

TrainTestSplit random_split(const Dataset& data, const SplitSpec& spec, Warnings* warnings) {
  if (data.rows() == 0) throw ValidationError("random_split: empty dataset");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie strictly between 0 and 1");
  }
  if (data.rows() < 2) throw ValidationError("random_split needs at least 2 rows");
  Rng rng(spec.seed);
  std::vector<std::size_t> test;
  std::vector<std::size_t> train;
  const auto take = [&](std::vector<std::size_t> pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(spec.test_fraction * static_cast<double>(pool.size())));
    test.insert(test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
  };
  if (spec.stratified) {
    std::vector<std::size_t> neg;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < data.rows(); ++i) (data.y[i] == 1 ? pos : neg).push_back(i);
    take(std::move(neg));
    take(std::move(pos));
  } else {
    std::vector<std::size_t> all(data.rows());
    std::iota(all.begin(), all.end(), 0);
    take(std::move(all));
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  TrainTestSplit out;
  out.train = data.subset(train);
  out.test = data.subset(test);
  out.train_indices = std::move(train);
  out.test_indices = std::move(test);
  const std::size_t test_pos = out.test.positives();
  if (test_pos == 0 || test_pos == out.test.rows()) {
    warn(warnings, "test split contains a single class");
  }
  const std::size_t train_pos = out.train.positives();
  if (train_pos == 0 || train_pos == out.train.rows()) {
    warn(warnings, "training split contains a single class");
  }
  return out;
}

ResampleMethod parse_resample(std::string_view text) {
  const std::string t = csv::lower(text);
  if (t == "none") return ResampleMethod::none;
  if (t == "undersample") return ResampleMethod::undersample;
  if (t == "smote") return ResampleMethod::smote;
  throw ValidationError("unknown resample method '" + std::string(text) + "'");
}

const char* to_string(ResampleMethod method) {
  switch (method) {
    case ResampleMethod::none: return "none";
    case ResampleMethod::undersample: return "undersample";
    case ResampleMethod::smote: return "smote";
  }
  return "none";
}

Resampled resample(const Dataset& data, ResampleMethod method, std::uint64_t seed, int k) {
  Resampled out;
  if (method == ResampleMethod::none) {
    out.data = data;
    return out;
  }
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < data.rows(); ++i) (data.y[i] == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw ValidationError("resample needs both classes present");
  const bool pos_minority = pos.size() < neg.size();
  const auto& minority = pos_minority ? pos : neg;
  const auto& majority = pos_minority ? neg : pos;
  const int minority_label = pos_minority ? 1 : 0;
  Rng rng(seed);

  if (method == ResampleMethod::undersample) {
    std::vector<std::size_t> keep = majority;
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(minority.size());
    keep.insert(keep.end(), minority.begin(), minority.end());
    std::sort(keep.begin(), keep.end());
    out.data = data.subset(keep);
    return out;
  }

  // SMOTE
  if (minority.size() < 2) throw ValidationError("SMOTE needs at least 2 minority rows");
  if (k < 1) throw ValidationError("SMOTE k must be at least 1");
  const std::size_t m = minority.size();
  const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);
  const std::size_t p = data.cols();
  std::vector<std::vector<std::size_t>> nearest(m);
  parallel_for(m, [&](std::size_t a) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(m - 1);
    const auto ra = data.row(minority[a]);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      const auto rb = data.row(minority[b]);
      double d2 = 0.0;
      for (std::size_t c = 0; c < p; ++c) d2 += (ra[c] - rb[c]) * (ra[c] - rb[c]);
      dist.emplace_back(d2, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
    for (std::size_t i = 0; i < k_eff; ++i) nearest[a].push_back(dist[i].second);
  });

  out.data = data;
  const std::size_t needed = majority.size() - minority.size();
  std::uniform_int_distribution<std::size_t> pick_row(0, m - 1);
  std::uniform_int_distribution<std::size_t> pick_neighbor(0, k_eff - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> synthetic(p);
  out.data.x.reserve((data.rows() + needed) * p);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = pick_row(rng);
    const std::size_t b = nearest[a][pick_neighbor(rng)];
    const double u = unit(rng);
    const auto ra = data.row(minority[a]);
    const auto rb = data.row(minority[b]);
    for (std::size_t c = 0; c < p; ++c) synthetic[c] = ra[c] + u * (rb[c] - ra[c]);
    out.data.append(synthetic, minority_label);
    out.parents.push_back({minority[a], minority[b]});
  }
  return out;
}

}  // namespace outbreak
