#include "morphconn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphconn/error.hpp"
#include "morphconn/random.hpp"

namespace morphconn {

int ForestParams::resolved_max_features(std::size_t n_features) const {
  const int p = static_cast<int>(n_features);
  int m = max_features ? *max_features
                       : static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
  return std::clamp(m, 1, std::max(p, 1));
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                 : node->right];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double gini(std::span<const int> counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  if (total <= 0.0) throw ValidationError("EmptyCounts", "gini of an empty node");
  double s = 0.0;
  for (int c : counts) s += (c / total) * (c / total);
  return 1.0 - s;
}

namespace {

using Wide = __int128;

/// Sum of squared class counts over n rows; the split score
/// S_L/n_L + S_R/n_R is compared exactly as a fraction.
struct Score {
  Wide num = 0;
  Wide den = 1;
};

bool greater(const Score& a, const Score& b) { return a.num * b.den > b.num * a.den; }

long long sum_sq(const ClassCounts& c) {
  long long s = 0;
  for (int v : c) s += static_cast<long long>(v) * v;
  return s;
}

ClassCounts count_classes(std::span<const int> labels, std::span<const std::size_t> rows) {
  ClassCounts c{};
  for (std::size_t r : rows) ++c[static_cast<std::size_t>(labels[r])];
  return c;
}

int classes_present(const ClassCounts& c) {
  return static_cast<int>(std::count_if(c.begin(), c.end(), [](int v) { return v > 0; }));
}

}  // namespace

std::optional<Split> best_split(const FeatureView& x, std::span<const int> labels,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features, int min_samples_leaf) {
  const ClassCounts total = count_classes(labels, rows);
  if (classes_present(total) < 2) return std::nullopt;
  const long long n = static_cast<long long>(rows.size());
  const Score parent{sum_sq(total), n};

  std::vector<std::size_t> sorted_features(features.begin(), features.end());
  std::sort(sorted_features.begin(), sorted_features.end());

  std::optional<Split> best;
  Score best_score = parent;
  std::vector<std::pair<double, int>> column(rows.size());
  for (std::size_t f : sorted_features) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x.at(rows[i], f), labels[rows[i]]};
    std::sort(column.begin(), column.end());
    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      ++left[static_cast<std::size_t>(column[i].second)];
      const double lo = column[i].first;
      const double hi = column[i + 1].first;
      if (!(lo < hi)) continue;
      const long long nl = static_cast<long long>(i + 1);
      const long long nr = n - nl;
      if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
      ClassCounts right{};
      for (int k = 0; k < kClassCount; ++k) right[k] = total[k] - left[k];
      const Score s{static_cast<Wide>(sum_sq(left)) * nr + static_cast<Wide>(sum_sq(right)) * nl,
                    static_cast<Wide>(nl) * nr};
      if (greater(s, best_score)) {
        double thr = (lo + hi) / 2.0;
        if (thr >= hi) thr = lo;
        best_score = s;
        const double score = static_cast<double>(s.num) / static_cast<double>(s.den);
        best = Split{f, thr, 1.0 - score / static_cast<double>(n)};
      }
    }
  }
  return best;
}

namespace {

struct TreeBuilder {
  const FeatureView& x;
  std::span<const int> labels;
  const ForestParams& params;
  int max_features;
  Rng rng;
  DecisionTree tree;
  std::vector<std::size_t> feature_pool;

  std::vector<std::size_t> draw_features() {
    // Partial Fisher-Yates over a fresh identity permutation.
    std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
    const std::size_t p = feature_pool.size();
    const std::size_t m = static_cast<std::size_t>(max_features);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(p - i));
      std::swap(feature_pool[i], feature_pool[j]);
    }
    return {feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(m)};
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes[id].counts = count_classes(labels, rows);

    const bool pure = classes_present(tree.nodes[id].counts) < 2;
    const bool too_small = static_cast<int>(rows.size()) < params.min_samples_split;
    const bool too_deep = params.max_depth && depth >= *params.max_depth;
    if (pure || too_small || too_deep) return id;

    const auto features = draw_features();
    const auto split = best_split(x, labels, rows, features, params.min_samples_leaf);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x.at(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = static_cast<int>(split->feature);
    tree.nodes[id].threshold = split->threshold;
    const int l = grow(std::move(left), depth + 1);
    tree.nodes[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree.nodes[id].right = r;
    return id;
  }
};

DecisionTree build_tree(const FeatureView& x, std::span<const int> labels,
                        const ForestParams& params, int max_features, std::uint64_t seed) {
  TreeBuilder b{x, labels, params, max_features, Rng(seed), {}, std::vector<std::size_t>(x.cols)};
  std::vector<std::size_t> rows(x.rows);
  if (params.bootstrap) {
    for (auto& r : rows) r = static_cast<std::size_t>(b.rng.uniform_index(x.rows));
  } else {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  b.grow(std::move(rows), 0);
  return std::move(b.tree);
}

int decide(const ClassCounts& counts, const ClassCounts& prior) {
  // Majority; tie -> larger training prior; then first in label order.
  int best = 0;
  for (int k = 1; k < kClassCount; ++k) {
    if (counts[k] > counts[best] || (counts[k] == counts[best] && prior[k] > prior[best])) best = k;
  }
  return best;
}

}  // namespace

ForestModel train_forest(const FeatureView& x, std::span<const Group> labels,
                         const ForestParams& params, Execution ex) {
  if (params.n_trees < 1) throw ValidationError("BadParams", "n_trees must be >= 1");
  if (params.min_samples_split < 2 || params.min_samples_leaf < 1) {
    throw ValidationError("BadParams", "min_samples_split >= 2 and min_samples_leaf >= 1 required");
  }
  if (x.cols == 0) throw ValidationError("EmptyFeatureSet", "forest needs at least one feature");
  if (labels.size() != x.rows) throw ValidationError("LabelMismatch", "labels/rows differ");
  if (x.rows < 2) throw ValidationError("TooFewSubjects", "forest needs at least 2 training rows");
  if (params.max_features && (*params.max_features < 1 || *params.max_features > static_cast<int>(x.cols))) {
    throw ValidationError("BadParams", "max_features must lie in [1, p]");
  }

  std::vector<int> y(labels.size());
  ForestModel model;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = class_index(labels[i]);
    ++model.class_prior[static_cast<std::size_t>(y[i])];
  }
  if (classes_present(model.class_prior) < 2) {
    throw ValidationError("SingleClass", "training labels contain a single class");
  }
  model.params = params;
  model.n_features = x.cols;
  const int m = params.resolved_max_features(x.cols);
  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  model.tree_seeds.resize(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) model.tree_seeds[t] = derive_seed(params.seed, t);
  model.trees.resize(n_trees);

  const long nt = static_cast<long>(n_trees);
  if (ex == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < nt; ++t) {
      model.trees[t] = build_tree(x, y, params, m, model.tree_seeds[t]);
    }
  } else {
    for (long t = 0; t < nt; ++t) {
      model.trees[t] = build_tree(x, y, params, m, model.tree_seeds[t]);
    }
  }
  return model;
}

Prediction predict(const ForestModel& model, std::span<const double> row) {
  if (row.size() != model.n_features) {
    throw ValidationError("DimensionMismatch", "row has " + std::to_string(row.size()) +
                                                   " features, model expects " +
                                                   std::to_string(model.n_features));
  }
  ClassCounts votes{};
  for (const auto& tree : model.trees) {
    ++votes[static_cast<std::size_t>(decide(tree.leaf_for(row).counts, model.class_prior))];
  }
  Prediction p;
  p.label = class_group(decide(votes, model.class_prior));
  for (int k = 0; k < kClassCount; ++k) {
    p.votes[k] = static_cast<double>(votes[k]) / static_cast<double>(model.trees.size());
  }
  return p;
}

std::vector<Group> predict_all(const ForestModel& model, const FeatureView& x, Execution ex) {
  if (x.cols != model.n_features) {
    throw ValidationError("DimensionMismatch", "feature count differs from model");
  }
  std::vector<Group> out(x.rows);
  const long n = static_cast<long>(x.rows);
  if (ex == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (long r = 0; r < n; ++r) out[r] = predict(model, x.row(static_cast<std::size_t>(r))).label;
  } else {
    for (long r = 0; r < n; ++r) out[r] = predict(model, x.row(static_cast<std::size_t>(r))).label;
  }
  return out;
}

std::vector<double> gini_importance(const ForestModel& model) {
  std::vector<double> total(model.n_features, 0.0);
  std::size_t contributing = 0;
  for (const auto& tree : model.trees) {
    std::vector<double> imp(model.n_features, 0.0);
    double sum = 0.0;
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = tree.nodes[static_cast<std::size_t>(node.left)].counts;
      const auto& r = tree.nodes[static_cast<std::size_t>(node.right)].counts;
      const double n = node.counts[0] + node.counts[1];
      const double nl = l[0] + l[1];
      const double nr = r[0] + r[1];
      const double decrease = n * gini(node.counts) - nl * gini(l) - nr * gini(r);
      imp[static_cast<std::size_t>(node.feature)] += decrease;
      sum += decrease;
    }
    if (sum <= 0.0) continue;
    ++contributing;
    for (std::size_t f = 0; f < imp.size(); ++f) total[f] += imp[f] / sum;
  }
  if (contributing == 0) return total;
  // Trees without splits contribute zero, as in the usual averaged definition.
  for (double& v : total) v /= static_cast<double>(model.trees.size());
  return total;
}

nlohmann::ordered_json to_json(const ForestParams& p) {
  nlohmann::ordered_json j;
  j["n_trees"] = p.n_trees;
  if (p.max_features) j["max_features"] = *p.max_features; else j["max_features"] = "sqrt";
  if (p.max_depth) j["max_depth"] = *p.max_depth; else j["max_depth"] = nullptr;
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["bootstrap"] = p.bootstrap;
  j["criterion"] = "gini";
  j["seed"] = p.seed;
  return j;
}

ForestParams forest_params_from_json(const nlohmann::json& j, ForestParams p) {
  if (!j.is_object()) throw ConfigError("BadForestParams", "forest parameters must be an object");
  if (j.contains("n_trees")) p.n_trees = j.at("n_trees").get<int>();
  if (j.contains("max_features")) {
    const auto& v = j.at("max_features");
    if (v.is_string() && v.get<std::string>() == "sqrt") p.max_features.reset();
    else if (v.is_number_integer()) p.max_features = v.get<int>();
    else throw ConfigError("BadForestParams", "max_features must be an integer or \"sqrt\"");
  }
  if (j.contains("max_depth")) {
    const auto& v = j.at("max_depth");
    if (v.is_null()) p.max_depth.reset(); else p.max_depth = v.get<int>();
  }
  if (j.contains("min_samples_split")) p.min_samples_split = j.at("min_samples_split").get<int>();
  if (j.contains("min_samples_leaf")) p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (j.contains("bootstrap")) p.bootstrap = j.at("bootstrap").get<bool>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

namespace {

nlohmann::ordered_json node_json(const DecisionTree& tree, int id) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  nlohmann::ordered_json j;
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
  }
  j["counts"] = {n.counts[0], n.counts[1]};
  if (!n.is_leaf()) {
    j["left"] = node_json(tree, n.left);
    j["right"] = node_json(tree, n.right);
  }
  return j;
}

int node_from_json(const nlohmann::json& j, DecisionTree& tree, std::size_t n_features) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  const auto& counts = j.at("counts");
  if (!counts.is_array() || counts.size() != kClassCount) {
    throw ValidationError("BadModel", "node counts must have 2 entries");
  }
  TreeNode node;
  node.counts = {counts[0].get<int>(), counts[1].get<int>()};
  if (j.contains("feature")) {
    node.feature = j.at("feature").get<int>();
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
      throw ValidationError("BadModel", "node feature out of range");
    }
    node.threshold = j.at("threshold").get<double>();
    node.left = node_from_json(j.at("left"), tree, n_features);
    node.right = node_from_json(j.at("right"), tree, n_features);
  }
  tree.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

}  // namespace

nlohmann::ordered_json to_json(const ForestModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "morphconn-forest";
  j["version"] = 1;
  j["params"] = to_json(model.params);
  j["label_order"] = {"TD", "ASD"};
  j["n_features"] = model.n_features;
  j["class_prior"] = {model.class_prior[0], model.class_prior[1]};
  j["tree_seeds"] = model.tree_seeds;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) trees.push_back(node_json(t, 0));
  j["trees"] = std::move(trees);
  return j;
}

ForestModel forest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "morphconn-forest" || j.at("version").get<int>() != 1) {
      throw ValidationError("BadModel", "unsupported model format or version");
    }
    ForestModel m;
    m.params = forest_params_from_json(j.at("params"));
    m.n_features = j.at("n_features").get<std::size_t>();
    m.class_prior = {j.at("class_prior")[0].get<int>(), j.at("class_prior")[1].get<int>()};
    m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      node_from_json(t, tree, m.n_features);
      m.trees.push_back(std::move(tree));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("BadModel", e.what());
  }
}

}  // namespace morphconn
