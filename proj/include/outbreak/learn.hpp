#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "outbreak/error.hpp"
#include "outbreak/features.hpp"

namespace outbreak {

/// Dense row-major design matrix with binary labels.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t row, std::size_t col) const { return x[row * cols() + col]; }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols(), cols()}; }
  std::size_t positives() const;

  void append(std::span<const double> features, int label);
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<double> column(std::size_t col) const;
};

/// The twelve predictors of each row, named as in kPredictorNames.
Dataset dataset_from_features(const std::vector<FeatureRow>& rows);

/// Robust scaler fitted column by column on `data`.
ScalerParams fit_scaler(ScalerKind kind, const Dataset& data);
void apply_scaler(const ScalerParams& params, Dataset& data);

// ---------------------------------------------------------------------------

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = false;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;  // ascending
  std::vector<std::size_t> test_indices;   // ascending
};

/// Uniform random partition with |test| = round(test_fraction · N). With
/// `stratified`, each class is split separately at the same fraction.
TrainTestSplit random_split(const Dataset& data, const SplitSpec& spec,
                            Warnings* warnings = nullptr);

enum class ResampleMethod { none, undersample, smote };

ResampleMethod parse_resample(std::string_view text);
const char* to_string(ResampleMethod method);

struct Resampled {
  Dataset data;
  /// For SMOTE: input row indices (row, neighbor) of each synthetic row, in
  /// the order the synthetic rows were appended.
  std::vector<std::array<std::size_t, 2>> parents;
};

/// undersample: drop random majority rows until the classes are equal.
/// smote: append row + u·(neighbor − row) for a random minority row, one of
/// its k nearest minority neighbors (Euclidean), and u ~ U[0, 1], until the
/// classes are equal. k is capped at minority − 1.
Resampled resample(const Dataset& data, ResampleMethod method, std::uint64_t seed, int k = 5);

// ---------------------------------------------------------------------------

enum class Criterion { gini, entropy };

Criterion parse_criterion(std::string_view text);
const char* to_string(Criterion criterion);

/// Impurity of a binary node with `positives` of `total` samples in class 1.
double impurity(Criterion criterion, double positives, double total);

struct ForestParams {
  Criterion criterion = Criterion::gini;
  int n_trees = 100;
  int max_depth = 0;           // 0 = unlimited
  int min_leaf = 1;
  int features_per_split = 0;  // 0 = ceil(sqrt(p))
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // −1 marks a leaf
  double threshold = 0.0;  // left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double probability = 0.0;  // P(class 1) at a leaf
  std::size_t samples = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  int depth() const;
};

struct ForestModel {
  std::vector<std::string> feature_names;
  ForestParams params;
  std::vector<DecisionTree> trees;
};

/// Bootstrap-aggregated CART trees. Tree t draws its bootstrap sample and
/// feature subsets from an engine seeded by `params.seed ^ t`, so the model
/// does not depend on the worker count.
ForestModel train_forest(const Dataset& train, const ForestParams& params,
                         Warnings* warnings = nullptr);

struct Prediction {
  std::vector<int> labels;
  std::vector<double> scores;
};

/// score = mean leaf probability of class 1; label = score >= 0.5.
Prediction predict(const ForestModel& model, const Dataset& data);
double predict_score(const ForestModel& model, std::span<const double> row);

nlohmann::json forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------

struct MetricsReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double mcc = 0.0;
  double roc_auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  /// Names of metrics whose denominator was zero; those report 0.
  std::vector<std::string> undefined;
};

MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted,
                       std::span<const double> scores);

/// Rank-statistic AUC with tied scores counted half. `defined` is false
/// when either class is absent.
double roc_auc(std::span<const int> truth, std::span<const double> scores, bool* defined = nullptr);

/// F1 of `predicted` against `truth` (0 when undefined).
double f1_score(std::span<const int> truth, std::span<const int> predicted);

nlohmann::json metrics_to_json(const MetricsReport& report);

struct FeatureImportance {
  std::string feature;
  double importance = 0.0;  // baseline F1 − mean permuted F1
  double stddev = 0.0;
  std::size_t feature_index = 0;
};

/// Column-shuffle importance on held-out rows, ranked by decreasing
/// importance. Repeat r of feature j shuffles with an engine seeded by
/// `seed ^ (j · n_repeats + r)`.
std::vector<FeatureImportance> permutation_importance(const ForestModel& model,
                                                      const Dataset& test, int n_repeats,
                                                      std::uint64_t seed);

}  // namespace outbreak
