#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "morphconn/atlas.hpp"
#include "morphconn/forest.hpp"
#include "morphconn/select.hpp"

namespace morphconn {

struct SplitSpec {
  double train_fraction = 0.8;
  bool stratify_by_label = true;
  std::uint64_t seed = 0;
};

struct TrainTestSplit {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

/// Per class (when stratified) round(train_fraction * class size) subjects go
/// to train, clamped so each side keeps at least one; the rest go to test.
/// Throws ValidationError("ClassTooSmall") for a class with fewer than two
/// subjects.
TrainTestSplit train_test_split(const std::vector<std::string>& subject_ids,
                                const std::vector<Group>& labels, const SplitSpec& spec);

/// Confusion counts with ASD as the positive class. Ratios with a zero
/// denominator are absent.
struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Harmonic mean of precision and recall; absent when both are zero.
std::optional<double> f1_score(double precision, double recall);

Metrics compute_metrics(const std::vector<Group>& y_true, const std::vector<Group>& y_pred);

nlohmann::ordered_json to_json(const Metrics& m);

/// Lobe attribution of selected features. MF features count once for their
/// region's lobe; MCF edges count once for each endpoint.
struct LobeTable {
  std::array<std::size_t, kLobeCount> counts{};
  std::size_t total = 0;
  std::array<double, kLobeCount> percent{};  // 0 when total == 0

  double percent_sum() const;
};

LobeTable lobe_fractions(const std::vector<FeatureDescriptor>& selected, const Atlas& atlas);

/// Lobes with nonzero share, sorted by percentage descending (ties in lobe order).
nlohmann::ordered_json to_json(const LobeTable& table);

enum class EdgeCriterion { kPValue, kGiniImportance };

std::string_view to_string(EdgeCriterion c);  // "pvalue" / "gini_importance"
std::optional<EdgeCriterion> parse_edge_criterion(std::string_view token);

struct RankedEdge {
  std::size_t rank = 0;
  std::size_t region_i = 0;
  std::size_t region_j = 0;
  Lobe lobe_i = Lobe::kFrontal;
  Lobe lobe_j = Lobe::kFrontal;
  double p_value = 1.0;
  double gini_importance = 0.0;
};

/// Top-k selected MCF edges. `model`, when given, must have been trained on
/// `selection.selected_columns()` in that order; its Gini importances are
/// attached to each edge. p-value ranks ascending, importance descending;
/// ties fall back to descriptor order. Throws ValidationError("NotMCF") for
/// MF selections and ConfigError when ranking by importance without a model.
std::vector<RankedEdge> rank_edges(const SelectionResult& selection, const ForestModel* model,
                                   const Atlas& atlas, EdgeCriterion criterion,
                                   std::size_t k = 100);

/// `rank,region_i,region_j,lobe_i,lobe_j,p_value,gini_importance`.
std::string edges_to_csv(const std::vector<RankedEdge>& edges, const Atlas& atlas);

}  // namespace morphconn
