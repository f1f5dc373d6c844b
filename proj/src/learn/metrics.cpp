#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "outbreak/learn.hpp"

namespace outbreak {

using json = nlohmann::json;

namespace {

void check_lengths(std::size_t truth, std::size_t other, const char* what) {
  if (truth != other) {
    throw DimensionMismatch(std::string(what) + " has " + std::to_string(other) +
                            " entries, truth has " + std::to_string(truth));
  }
}

double ratio(double num, double den, const char* name, std::vector<std::string>& undefined) {
  if (den == 0.0) {
    undefined.emplace_back(name);
    return 0.0;
  }
  return num / den;
}

}  // namespace

double roc_auc(std::span<const int> truth, std::span<const double> scores, bool* defined) {
  check_lengths(truth.size(), scores.size(), "scores");
  const std::size_t n = truth.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: a run of equal scores shares the average of its ranks.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    if (defined != nullptr) *defined = false;
    return 0.0;
  }
  if (defined != nullptr) *defined = true;
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double f1_score(std::span<const int> truth, std::span<const int> predicted) {
  check_lengths(truth.size(), predicted.size(), "predictions");
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    if (predicted[i] == 1 && truth[i] != 1) ++fp;
    if (predicted[i] != 1 && truth[i] == 1) ++fn;
  }
  const std::size_t den = 2 * tp + fp + fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted,
                       std::span<const double> scores) {
  if (truth.empty()) throw ValidationError("cannot evaluate an empty prediction set");
  check_lengths(truth.size(), predicted.size(), "predictions");
  check_lengths(truth.size(), scores.size(), "scores");

  MetricsReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == 1;
    const bool p = predicted[i] == 1;
    if (t && p) ++r.tp;
    else if (!t && p) ++r.fp;
    else if (t && !p) ++r.fn;
    else ++r.tn;
  }
  const auto tp = static_cast<double>(r.tp);
  const auto fp = static_cast<double>(r.fp);
  const auto fn = static_cast<double>(r.fn);
  const auto tn = static_cast<double>(r.tn);
  auto& u = r.undefined;

  r.accuracy = (tp + tn) / static_cast<double>(truth.size());
  r.precision = ratio(tp, tp + fp, "precision", u);
  r.recall = ratio(tp, tp + fn, "recall", u);
  r.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, "f1", u);
  if (tp + fn == 0.0 || tn + fp == 0.0) {
    u.emplace_back("balanced_accuracy");
  } else {
    r.balanced_accuracy = (tp / (tp + fn) + tn / (tn + fp)) / 2.0;
  }
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  r.mcc = ratio(tp * tn - fp * fn, den, "mcc", u);
  bool auc_defined = false;
  r.roc_auc = roc_auc(truth, scores, &auc_defined);
  if (!auc_defined) u.emplace_back("roc_auc");
  return r;
}

json metrics_to_json(const MetricsReport& r) {
  return {{"accuracy", r.accuracy},
          {"balanced_accuracy", r.balanced_accuracy},
          {"mcc", r.mcc},
          {"roc_auc", r.roc_auc},
          {"f1", r.f1},
          {"precision", r.precision},
          {"recall", r.recall},
          {"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}}},
          {"undefined", r.undefined}};
}

}  // namespace outbreak
