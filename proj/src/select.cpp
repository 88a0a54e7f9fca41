#include "morphconn/select.hpp"

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"

namespace morphconn {

std::vector<std::size_t> SelectionResult::selected_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < results.size(); ++c) {
    if (results[c].selected) out.push_back(c);
  }
  return out;
}

namespace {

TestResult test_column(const FeatureMatrix& matrix, std::size_t col,
                       const std::vector<std::size_t>& asd_rows,
                       const std::vector<std::size_t>& td_rows, double alpha,
                       TTestVariant variant, std::vector<double>& a, std::vector<double>& b) {
  a.clear();
  b.clear();
  for (std::size_t r : asd_rows) a.push_back(matrix.at(r, col));
  for (std::size_t r : td_rows) b.push_back(matrix.at(r, col));
  const TStatistic ts = variant == TTestVariant::kWelch ? welch_t(a, b) : pooled_t(a, b);
  TestResult res;
  res.descriptor = matrix.descriptors[col];
  res.t = ts.t;
  res.df = ts.df;
  res.p = t_two_sided_p(ts.t, ts.df);
  res.selected = res.p < alpha;
  return res;
}

}  // namespace

SelectionResult select_features(const FeatureMatrix& matrix, const std::vector<Group>& labels,
                                const std::vector<bool>& mask, double alpha, FitScope scope,
                                TTestVariant variant, Execution ex) {
  if (labels.size() != matrix.rows() || mask.size() != matrix.rows()) {
    throw ValidationError("LabelMismatch", "labels/mask length differs from matrix rows");
  }
  std::vector<std::size_t> asd_rows, td_rows;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (!mask[r]) continue;
    (labels[r] == Group::kASD ? asd_rows : td_rows).push_back(r);
  }
  if (asd_rows.size() < 2 || td_rows.size() < 2) {
    throw ValidationError("GroupTooSmall", "feature selection needs at least 2 ASD and 2 TD subjects (got " +
                                               std::to_string(asd_rows.size()) + " ASD, " +
                                               std::to_string(td_rows.size()) + " TD)");
  }

  SelectionResult sel;
  sel.alpha = alpha;
  sel.scope = scope;
  sel.variant = variant;
  sel.results.resize(matrix.cols());
  const long cols = static_cast<long>(matrix.cols());
  if (ex == Execution::kParallel) {
#pragma omp parallel
    {
      std::vector<double> a, b;
#pragma omp for schedule(static)
      for (long c = 0; c < cols; ++c) {
        sel.results[c] = test_column(matrix, static_cast<std::size_t>(c), asd_rows, td_rows, alpha,
                                     variant, a, b);
      }
    }
  } else {
    std::vector<double> a, b;
    for (long c = 0; c < cols; ++c) {
      sel.results[c] = test_column(matrix, static_cast<std::size_t>(c), asd_rows, td_rows, alpha,
                                   variant, a, b);
    }
  }
  for (const auto& r : sel.results) sel.selected_count += r.selected ? 1 : 0;
  return sel;
}

SelectionResult select_features(const FeatureMatrix& matrix, const std::vector<Group>& labels,
                                double alpha, TTestVariant variant, Execution ex) {
  return select_features(matrix, labels, std::vector<bool>(matrix.rows(), true), alpha,
                         FitScope::kFullCohort, variant, ex);
}

std::string selection_to_csv(const SelectionResult& selection, const Atlas& atlas) {
  std::string out = "descriptor,t,df,p,selected\n";
  for (const auto& r : selection.results) {
    out += csv::escape(descriptor_name(r.descriptor, atlas)) + ',' + csv::format_double17(r.t) + ',' +
           csv::format_double17(r.df) + ',' + csv::format_double17(r.p) + ',' +
           (r.selected ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace morphconn
