#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "morphconn/ingest.hpp"
#include "morphconn/kernels.hpp"

namespace morphconn {

/// Class index used inside the forest; label order is (TD, ASD).
inline constexpr int kTDClass = 0;
inline constexpr int kASDClass = 1;
inline constexpr int kClassCount = 2;

inline int class_index(Group g) { return g == Group::kASD ? kASDClass : kTDClass; }
inline Group class_group(int c) { return c == kASDClass ? Group::kASD : Group::kTD; }

using ClassCounts = std::array<int, kClassCount>;

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_features;  // absent: floor(sqrt(p)), at least 1
  std::optional<int> max_depth;     // absent: unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  bool bootstrap = true;  // n draws with replacement
  std::uint64_t seed = 0;

  int resolved_max_features(std::size_t n_features) const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Internal when feature >= 0; leaf otherwise. `counts` are the class counts
/// of the training rows that reached the node.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassCounts counts{};

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat node array; node 0 is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestModel {
  ForestParams params;
  std::size_t n_features = 0;
  ClassCounts class_prior{};  // training label counts, used for tie-breaking
  std::vector<std::uint64_t> tree_seeds;
  std::vector<DecisionTree> trees;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Row-major feature view used by the tree builder.
struct FeatureView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return values.subspan(r * cols, cols); }
};

/// 1 - sum_k (count_k / total)^2. Throws ValidationError("EmptyCounts") if all zero.
double gini(std::span<const int> counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child Gini
};

/// Best Gini split over `features` for the (possibly repeated) `rows`.
/// Thresholds are midpoints between consecutive distinct values; rows with
/// x <= threshold go left. Ties go to the lower feature index, then the lower
/// threshold. Returns nullopt when no candidate strictly lowers the impurity.
std::optional<Split> best_split(const FeatureView& x, std::span<const int> labels,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features, int min_samples_leaf = 1);

/// Bagged CART forest. Tree t uses its own RNG stream seeded by
/// derive_seed(params.seed, t), so serial and parallel training agree.
ForestModel train_forest(const FeatureView& x, std::span<const Group> labels,
                         const ForestParams& params, Execution ex = Execution::kParallel);

struct Prediction {
  Group label = Group::kTD;
  std::array<double, kClassCount> votes{};  // fraction of trees per class (TD, ASD)
};

Prediction predict(const ForestModel& model, std::span<const double> row);
std::vector<Group> predict_all(const ForestModel& model, const FeatureView& x,
                               Execution ex = Execution::kParallel);

/// Mean decrease in Gini impurity per feature, normalized per tree and
/// averaged; sums to 1 unless no tree has a split.
std::vector<double> gini_importance(const ForestModel& model);

nlohmann::ordered_json to_json(const ForestParams& params);
ForestParams forest_params_from_json(const nlohmann::json& j, ForestParams defaults = {});

nlohmann::ordered_json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace morphconn
