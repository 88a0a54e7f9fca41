#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphconn/ingest.hpp"
#include "morphconn/kernels.hpp"

namespace morphconn {

/// Which subjects a fitted statistic (standardizer, t-test) may see.
enum class FitScope { kTrainOnly, kFullCohort };

std::string_view to_string(FitScope scope);  // "train_only" / "full_cohort"
std::optional<FitScope> parse_fit_scope(std::string_view token);

/// Per-column mean and sample SD over the fit subjects, one pair per
/// (region, measure) column in region-major order.
struct StandardizationParams {
  std::string atlas_hash;
  std::size_t regions = 0;
  std::size_t fit_count = 0;
  FitScope scope = FitScope::kTrainOnly;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<bool> constant;  // sd == 0
};

/// Standardized measures, subjects x regions x 4, row-major.
struct StandardizedTensor {
  std::vector<std::string> subject_ids;
  std::size_t regions = 0;
  std::vector<double> values;

  std::size_t subjects() const noexcept { return subject_ids.size(); }
  std::span<const double> profile(std::size_t subject, std::size_t region) const {
    return {values.data() + (subject * regions + region) * kMeasureCount, kMeasureCount};
  }
};

/// mask[i] selects subject i of the dataset. Throws ValidationError
/// ("InsufficientSubjects") for fewer than two masked subjects.
StandardizationParams fit_standardizer(const CohortDataset& dataset, const std::vector<bool>& mask,
                                       FitScope scope = FitScope::kTrainOnly);

/// z = (x - mean) / sd, with constant columns mapped to 0.
StandardizedTensor apply_standardizer(const StandardizationParams& params,
                                      const CohortDataset& dataset,
                                      Execution ex = Execution::kParallel);

enum class FeatureKind { kMF, kMCF };

std::string_view to_string(FeatureKind kind);  // "MF" / "MCF"
std::optional<FeatureKind> parse_feature_kind(std::string_view token);  // case-insensitive

/// MF: (first = region, measure). MCF: (first = region i, second = region j), i < j.
struct FeatureDescriptor {
  FeatureKind kind = FeatureKind::kMF;
  std::size_t first = 0;
  std::size_t second = 0;
  Measure measure = Measure::kArea;

  friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

/// "MF:{region}__{measure}" or "MCF:{region_i}__{region_j}".
std::string descriptor_name(const FeatureDescriptor& d, const Atlas& atlas);

struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kMF;
  std::string atlas_hash;
  std::vector<std::string> subject_ids;
  std::vector<FeatureDescriptor> descriptors;
  std::vector<double> values;  // subjects x descriptors, row-major

  std::size_t rows() const noexcept { return subject_ids.size(); }
  std::size_t cols() const noexcept { return descriptors.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

  /// Copy of the given columns, in the given order.
  FeatureMatrix select_columns(const std::vector<std::size_t>& columns) const;
};

constexpr std::size_t mf_column_count(std::size_t regions) { return kMeasureCount * regions; }
constexpr std::size_t mcf_column_count(std::size_t regions) {
  return regions < 2 ? 0 : regions * (regions - 1) / 2;
}

std::vector<FeatureDescriptor> mf_descriptors(std::size_t regions);
std::vector<FeatureDescriptor> mcf_descriptors(std::size_t regions);

/// Region-major, measure-minor (area, thickness, volume, meancurv).
FeatureMatrix build_mf(const StandardizedTensor& tensor, const Atlas& atlas);

/// Euclidean distance between two 4-measure region profiles. Throws
/// ValidationError("NonFiniteValue") on NaN/inf input.
double euclidean(std::span<const double> a, std::span<const double> b);

/// One column per region pair (i < j), lexicographic.
FeatureMatrix build_mcf(const StandardizedTensor& tensor, const Atlas& atlas,
                        Execution ex = Execution::kParallel);

FeatureMatrix build_features(FeatureKind kind, const StandardizedTensor& tensor,
                             const Atlas& atlas, Execution ex = Execution::kParallel);

std::string feature_matrix_to_csv(const FeatureMatrix& m, const Atlas& atlas);
FeatureMatrix feature_matrix_from_csv(std::string_view text, const Atlas& atlas);

/// Compact binary cache. `key` identifies the inputs (e.g. hash of the
/// morphometry file + band + scope); a cache is only returned when both the
/// atlas hash and the key match.
void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& m,
                         const std::string& key);
std::optional<FeatureMatrix> read_feature_cache(const std::filesystem::path& path,
                                                const Atlas& atlas, const std::string& key);

}  // namespace morphconn
