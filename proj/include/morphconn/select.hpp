#pragma once

#include <string>
#include <vector>

#include "morphconn/features.hpp"
#include "morphconn/ingest.hpp"
#include "morphconn/kernels.hpp"
#include "morphconn/stats.hpp"

namespace morphconn {

enum class TTestVariant { kWelch, kPooled };

struct TestResult {
  FeatureDescriptor descriptor;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool selected = false;
};

struct SelectionResult {
  double alpha = 0.05;
  FitScope scope = FitScope::kTrainOnly;
  TTestVariant variant = TTestVariant::kWelch;
  std::vector<TestResult> results;  // one per matrix column, in column order
  std::size_t selected_count = 0;

  /// Column indices with selected == true, ascending.
  std::vector<std::size_t> selected_columns() const;
};

/// Tests every column of `matrix` (ASD minus TD) using only rows with
/// mask[r] set; selects columns with p < alpha. Throws ValidationError
/// ("GroupTooSmall") when either group has fewer than two masked rows.
SelectionResult select_features(const FeatureMatrix& matrix, const std::vector<Group>& labels,
                                const std::vector<bool>& mask, double alpha, FitScope scope,
                                TTestVariant variant = TTestVariant::kWelch,
                                Execution ex = Execution::kParallel);

/// All rows in scope.
SelectionResult select_features(const FeatureMatrix& matrix, const std::vector<Group>& labels,
                                double alpha, TTestVariant variant = TTestVariant::kWelch,
                                Execution ex = Execution::kParallel);

/// `descriptor,t,df,p,selected` with 17 significant digits.
std::string selection_to_csv(const SelectionResult& selection, const Atlas& atlas);

}  // namespace morphconn
