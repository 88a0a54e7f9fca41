#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "morphconn/cohort.hpp"
#include "morphconn/evaluate.hpp"
#include "morphconn/features.hpp"
#include "morphconn/forest.hpp"
#include "morphconn/select.hpp"

namespace morphconn {

/// Subject pool the standardizer is fitted on: the age band being analysed
/// or the whole cohort. Test subjects of the band are excluded whenever the
/// standardization scope is train_only.
enum class StandardizationPool { kBand, kCohort };

std::string_view to_string(StandardizationPool pool);
std::optional<StandardizationPool> parse_standardization_pool(std::string_view token);
std::string_view to_string(TTestVariant v);
std::optional<TTestVariant> parse_ttest_variant(std::string_view token);

struct ExperimentConfig {
  double alpha = 0.05;
  FitScope selection_scope = FitScope::kTrainOnly;
  FitScope standardization_scope = FitScope::kTrainOnly;
  StandardizationPool standardization_pool = StandardizationPool::kBand;
  TTestVariant ttest = TTestVariant::kWelch;
  ForestParams forest;  // seed is replaced by the derived forest seed
  SplitSpec split;      // seed is replaced by the derived split seed
  std::size_t top_k = 100;
  EdgeCriterion edge_criterion = EdgeCriterion::kPValue;
  std::uint64_t master_seed = 0;
  int repeats = 1;
  std::map<std::string, std::string> input_hashes;
  Execution execution = Execution::kParallel;
};

/// Named sub-seeds of one (band, kind, repeat) cell.
std::uint64_t split_seed(std::uint64_t master, const std::string& band, int repeat);
std::uint64_t forest_seed(std::uint64_t master, const std::string& band, FeatureKind kind,
                          int repeat);

/// Everything up to (and including) feature construction for one cell.
struct PreparedCell {
  CohortDataset band_dataset;
  std::vector<Group> labels;  // per band_dataset row
  TrainTestSplit split;
  std::vector<bool> train_mask;  // per band_dataset row
  StandardizationParams standardization;
  FeatureMatrix features;  // rows = band_dataset subjects
  std::uint64_t split_seed = 0;
};

PreparedCell prepare_cell(const CohortDataset& cohort, const AgeBand& band, FeatureKind kind,
                          const ExperimentConfig& config, int repeat = 0);

SelectionResult select_cell(const PreparedCell& cell, const ExperimentConfig& config);

/// Trains on the training rows restricted to the selected columns. Throws
/// RuntimeFailure("NoFeaturesSelected") when the selection is empty.
ForestModel train_cell(const PreparedCell& cell, const SelectionResult& selection,
                       const ForestParams& params, Execution ex);

struct RepeatSummary {
  int repeats = 0;
  std::map<std::string, std::pair<double, std::optional<double>>> mean_sd;  // metric -> (mean, sd)
};

struct ExperimentReport {
  AgeBand band;
  FeatureKind kind = FeatureKind::kMF;
  std::size_t n_td = 0;
  std::size_t n_asd = 0;
  TrainTestSplit split;
  std::size_t standardization_fit_count = 0;
  std::size_t constant_columns = 0;
  std::size_t total_features = 0;
  SelectionResult selection;
  bool degenerate = false;  // no feature passed selection; majority-class baseline used
  std::optional<ForestModel> model;
  Metrics metrics;
  LobeTable lobes;
  std::vector<RankedEdge> edges;
  std::map<std::string, std::uint64_t> seeds;
  std::optional<RepeatSummary> repeat_summary;
};

/// stratify -> split -> standardize -> features -> select -> train -> predict
/// -> metrics -> lobe/edge reports. Errors are rethrown with the stage name
/// prefixed to the message.
ExperimentReport run_experiment(const CohortDataset& cohort, const AgeBand& band, FeatureKind kind,
                                const ExperimentConfig& config);

/// Reference ABIDE accuracies for a (band, kind) cell; documentation only.
std::optional<double> reference_accuracy(const std::string& band, FeatureKind kind);

nlohmann::ordered_json to_json(const ExperimentReport& report, const ExperimentConfig& config,
                               const Atlas& atlas);
std::string report_text(const ExperimentReport& report, const Atlas& atlas);

/// Rows = bands (in the given order), columns = {MF,MCF} x {accuracy,precision,recall,f1}.
std::string metrics_grid_csv(const std::vector<ExperimentReport>& reports,
                             const std::vector<AgeBand>& bands);

}  // namespace morphconn
