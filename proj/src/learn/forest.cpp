#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <nlohmann/json.hpp>

#include "outbreak/csv.hpp"
#include "outbreak/learn.hpp"
#include "outbreak/parallel.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

using json = nlohmann::json;

Criterion parse_criterion(std::string_view text) {
  const std::string t = csv::lower(text);
  if (t == "gini") return Criterion::gini;
  if (t == "entropy") return Criterion::entropy;
  throw ValidationError("unknown criterion '" + std::string(text) + "'");
}

const char* to_string(Criterion criterion) {
  return criterion == Criterion::gini ? "gini" : "entropy";
}

double impurity(Criterion criterion, double positives, double total) {
  if (total <= 0.0) return 0.0;
  const double p1 = positives / total;
  const double p0 = 1.0 - p1;
  if (criterion == Criterion::gini) return 1.0 - p0 * p0 - p1 * p1;
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  if (p1 > 0.0) h -= p1 * std::log2(p1);
  return h;
}

double DecisionTree::predict(std::span<const double> row) const {
  int k = 0;
  while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(k)];
    k = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(k)].probability;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    const auto [k, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& n = nodes[static_cast<std::size_t>(k)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

namespace {

using RowId = std::uint32_t;

// Grows one tree over a bootstrap sample. Each feature keeps its own copy of
// the sample sorted by that feature; a node owns the same [lo, hi) slice in
// every copy, and a split stable-partitions every slice so the children stay
// sorted without re-sorting.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, std::size_t mtry,
              const std::vector<std::vector<RowId>>& presorted, std::uint64_t tree_seed)
      : data_(data), params_(params), mtry_(mtry), rng_(tree_seed) {
    const std::size_t n = data.rows();
    std::vector<std::uint32_t> counts(n, 0);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) ++counts[draw(rng_)];
    order_.resize(data.cols());
    for (std::size_t f = 0; f < data.cols(); ++f) {
      auto& o = order_[f];
      o.reserve(n);
      for (RowId row : presorted[f]) o.insert(o.end(), counts[row], row);
    }
    goes_left_.assign(n, 0);
    scratch_.resize(n);
    features_.resize(data.cols());
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build() {
    struct Task {
      int node;
      std::size_t lo;
      std::size_t hi;
      int depth;
    };
    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<Task> stack = {{0, 0, order_[0].size(), 0}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto& rows = order_[0];
      std::size_t pos = 0;
      for (std::size_t i = t.lo; i < t.hi; ++i) pos += static_cast<std::size_t>(data_.y[rows[i]]);
      const std::size_t total = t.hi - t.lo;
      TreeNode& node = tree.nodes[static_cast<std::size_t>(t.node)];
      node.samples = total;
      node.probability = total == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(total);

      const bool pure = pos == 0 || pos == total;
      const bool depth_limited = params_.max_depth > 0 && t.depth >= params_.max_depth;
      const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
      if (pure || depth_limited || total < 2 * min_leaf) continue;

      const Split best = find_split(t.lo, t.hi, pos);
      if (best.feature < 0) continue;

      const std::size_t mid = t.lo + best.left_count;
      const auto& sorted = order_[static_cast<std::size_t>(best.feature)];
      for (std::size_t i = t.lo; i < t.hi; ++i) goes_left_[sorted[i]] = i < mid ? 1 : 0;
      for (auto& o : order_) {
        std::size_t l = t.lo;
        std::size_t r = 0;
        for (std::size_t i = t.lo; i < t.hi; ++i) {
          if (goes_left_[o[i]] != 0) {
            o[l++] = o[i];
          } else {
            scratch_[r++] = o[i];
          }
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                  o.begin() + static_cast<std::ptrdiff_t>(l));
      }

      const int left = static_cast<int>(tree.nodes.size());
      const int right = left + 1;
      TreeNode& parent = tree.nodes[static_cast<std::size_t>(t.node)];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = right;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stack.push_back({right, mid, t.hi, t.depth + 1});
      stack.push_back({left, t.lo, mid, t.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
    double score = 0.0;  // n_left·imp(left) + n_right·imp(right)
  };

  // Draws features without replacement; the first `mtry_` are always scored,
  // and drawing continues past them only while no usable split was found.
  Split find_split(std::size_t lo, std::size_t hi, std::size_t pos) {
    const std::size_t total = hi - lo;
    const double parent = static_cast<double>(total) *
                          impurity(params_.criterion, static_cast<double>(pos),
                                   static_cast<double>(total));
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    Split best;
    best.score = parent - 1e-12 * static_cast<double>(total);
    const std::size_t p = features_.size();
    for (std::size_t t = 0; t < p; ++t) {
      if (t >= mtry_ && best.feature >= 0) break;
      std::uniform_int_distribution<std::size_t> pick(t, p - 1);
      std::swap(features_[t], features_[pick(rng_)]);
      const std::size_t f = features_[t];
      const auto& o = order_[f];
      std::size_t left_pos = 0;
      for (std::size_t i = lo; i + 1 < hi; ++i) {
        left_pos += static_cast<std::size_t>(data_.y[o[i]]);
        const double v = data_.at(o[i], f);
        const double next = data_.at(o[i + 1], f);
        if (!(v < next)) continue;
        const std::size_t nl = i - lo + 1;
        const std::size_t nr = total - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score =
            static_cast<double>(nl) * impurity(params_.criterion, static_cast<double>(left_pos),
                                               static_cast<double>(nl)) +
            static_cast<double>(nr) * impurity(params_.criterion,
                                               static_cast<double>(pos - left_pos),
                                               static_cast<double>(nr));
        if (score < best.score) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold < next)) threshold = v;
          best = {static_cast<int>(f), threshold, nl, score};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::vector<RowId>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<RowId> scratch_;
  std::vector<std::size_t> features_;
};

}  // namespace

ForestModel train_forest(const Dataset& train, const ForestParams& params, Warnings* warnings) {
  if (train.rows() < 2) throw ValidationError("train_forest needs at least 2 rows");
  if (train.cols() < 1) throw ValidationError("train_forest needs at least 1 feature");
  if (params.n_trees < 1) throw ValidationError("n_trees must be at least 1");
  if (params.min_leaf < 1) throw ValidationError("min_leaf must be at least 1");
  if (params.max_depth < 0) throw ValidationError("max_depth must be non-negative");
  if (train.rows() > std::numeric_limits<RowId>::max()) {
    throw ValidationError("training set too large");
  }
  const std::size_t p = train.cols();
  std::size_t mtry = params.features_per_split > 0
                         ? static_cast<std::size_t>(params.features_per_split)
                         : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::clamp<std::size_t>(mtry, 1, p);

  const std::size_t positives = train.positives();
  if (positives == 0 || positives == train.rows()) {
    warn(warnings, "training data holds a single class; every tree is a single leaf");
  }

  std::vector<std::vector<RowId>> presorted(p);
  parallel_for(p, [&](std::size_t f) {
    auto& o = presorted[f];
    o.resize(train.rows());
    std::iota(o.begin(), o.end(), RowId{0});
    std::stable_sort(o.begin(), o.end(),
                     [&](RowId a, RowId b) { return train.at(a, f) < train.at(b, f); });
  });

  ForestModel model;
  model.feature_names = train.feature_names;
  model.params = params;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(model.trees.size(), [&](std::size_t t) {
    TreeBuilder builder(train, params, mtry, presorted, derive_seed(params.seed, t));
    model.trees[t] = builder.build();
  });
  return model;
}

double predict_score(const ForestModel& model, std::span<const double> row) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(row);
  return sum / static_cast<double>(model.trees.size());
}

Prediction predict(const ForestModel& model, const Dataset& data) {
  if (data.feature_names != model.feature_names) {
    throw SchemaMismatch("feature schema does not match the trained model (" +
                         std::to_string(data.cols()) + " columns vs " +
                         std::to_string(model.feature_names.size()) + ")");
  }
  Prediction out;
  out.scores.resize(data.rows());
  out.labels.resize(data.rows());
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (data.rows() + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(data.rows(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      out.scores[i] = predict_score(model, data.row(i));
      out.labels[i] = out.scores[i] >= 0.5 ? 1 : 0;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json node_to_json(const DecisionTree& tree, int k, const std::vector<std::string>& names) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(k)];
  json j;
  j["samples"] = n.samples;
  if (n.feature < 0) {
    j["probabilities"] = {1.0 - n.probability, n.probability};
    return j;
  }
  j["feature"] = names[static_cast<std::size_t>(n.feature)];
  j["feature_index"] = n.feature;
  j["threshold"] = n.threshold;
  j["left"] = node_to_json(tree, n.left, names);
  j["right"] = node_to_json(tree, n.right, names);
  return j;
}

int node_from_json(const json& j, DecisionTree& tree, std::size_t n_features) {
  const int k = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode n;
  n.samples = j.at("samples").get<std::size_t>();
  if (j.contains("probabilities")) {
    n.probability = j.at("probabilities").at(1).get<double>();
    tree.nodes[static_cast<std::size_t>(k)] = n;
    return k;
  }
  n.feature = j.at("feature_index").get<int>();
  if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features) {
    throw ParseError("model JSON: feature index out of range");
  }
  n.threshold = j.at("threshold").get<double>();
  n.left = node_from_json(j.at("left"), tree, n_features);
  n.right = node_from_json(j.at("right"), tree, n_features);
  tree.nodes[static_cast<std::size_t>(k)] = n;
  return k;
}

}  // namespace

json forest_to_json(const ForestModel& model) {
  json doc;
  doc["format"] = "outbreak-forest";
  doc["version"] = 1;
  doc["feature_names"] = model.feature_names;
  doc["params"] = {{"criterion", to_string(model.params.criterion)},
                   {"n_trees", model.params.n_trees},
                   {"max_depth", model.params.max_depth},
                   {"min_leaf", model.params.min_leaf},
                   {"features_per_split", model.params.features_per_split},
                   {"seed", model.params.seed}};
  json trees = json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(tree, 0, model.feature_names));
  doc["trees"] = std::move(trees);
  return doc;
}

ForestModel forest_from_json(const json& doc) {
  try {
    if (doc.at("format") != "outbreak-forest") throw ParseError("not an outbreak-forest document");
    if (doc.at("version").get<int>() != 1) throw ParseError("unsupported model version");
    ForestModel model;
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    const auto& p = doc.at("params");
    model.params.criterion = parse_criterion(p.at("criterion").get<std::string>());
    model.params.n_trees = p.at("n_trees").get<int>();
    model.params.max_depth = p.at("max_depth").get<int>();
    model.params.min_leaf = p.at("min_leaf").get<int>();
    model.params.features_per_split = p.at("features_per_split").get<int>();
    model.params.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& t : doc.at("trees")) {
      DecisionTree tree;
      node_from_json(t, tree, model.feature_names.size());
      model.trees.push_back(std::move(tree));
    }
    if (model.trees.empty()) throw ParseError("model has no trees");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace outbreak
