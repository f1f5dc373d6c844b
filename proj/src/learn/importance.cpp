#include <algorithm>
#include <cmath>
#include <numeric>

#include "outbreak/learn.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

std::vector<FeatureImportance> permutation_importance(const ForestModel& model,
                                                      const Dataset& test, int n_repeats,
                                                      std::uint64_t seed) {
  if (n_repeats < 1) throw ValidationError("n_repeats must be at least 1");
  if (test.rows() == 0) throw ValidationError("permutation importance needs test rows");
  const Prediction base = predict(model, test);
  const double baseline = f1_score(test.y, base.labels);

  const std::size_t p = test.cols();
  const auto reps = static_cast<std::size_t>(n_repeats);
  std::vector<double> drops(p * reps);
  parallel_for(p * reps, [&](std::size_t task) {
    const std::size_t j = task / reps;
    Rng rng = make_stream(seed, task);  // task == j·n_repeats + r
    std::vector<std::size_t> perm(test.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> row(p);
    std::vector<int> labels(test.rows());
    for (std::size_t i = 0; i < test.rows(); ++i) {
      const auto src = test.row(i);
      std::copy(src.begin(), src.end(), row.begin());
      row[j] = test.at(perm[i], j);
      labels[i] = predict_score(model, row) >= 0.5 ? 1 : 0;
    }
    drops[task] = baseline - f1_score(test.y, labels);
  });

  std::vector<FeatureImportance> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto first = drops.begin() + static_cast<std::ptrdiff_t>(j * reps);
    const double mean = std::accumulate(first, first + static_cast<std::ptrdiff_t>(reps), 0.0) /
                        static_cast<double>(reps);
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) ss += (first[r] - mean) * (first[r] - mean);
    out[j] = {test.feature_names[j], mean,
              reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0, j};
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.importance > b.importance;
  });
  return out;
}

}  // namespace outbreak
