#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "morphconn/ingest.hpp"

namespace morphconn {

/// Age interval [lower, upper) or [lower, upper] when `upper_inclusive`.
struct AgeBand {
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
  bool upper_inclusive = false;

  bool contains(double age) const noexcept {
    return age >= lower && (upper_inclusive ? age <= upper : age < upper);
  }
  friend bool operator==(const AgeBand&, const AgeBand&) = default;
};

/// [6,11) "6to11", [11,18] "11to18", [6,18] "6to18". The 11-year boundary
/// belongs to the older band so the first two bands partition the third.
std::vector<AgeBand> default_bands();

/// Looks a label up among `default_bands()`; throws ConfigError if unknown.
AgeBand band_by_label(const std::string& label);

/// Subjects whose age falls in `band`, order preserved.
CohortDataset stratify(const CohortDataset& dataset, const AgeBand& band);

struct GroupSummary {
  std::size_t count = 0;
  std::size_t male = 0;
  std::size_t female = 0;
  std::size_t fiq_n = 0;
  std::optional<double> fiq_mean;
  std::optional<double> fiq_sd;  // sample SD; absent when fiq_n < 2
};

struct DemographicSummary {
  GroupSummary td;
  GroupSummary asd;
};

DemographicSummary demographic_summary(const std::vector<PhenotypeRecord>& phenotypes);
DemographicSummary demographic_summary(const CohortDataset& dataset);

nlohmann::ordered_json to_json(const DemographicSummary& summary);

/// Aligned text table with one TD/ASD column pair per band
/// (Count, Gender, FIQ mean +/- SD rows).
std::string demographic_table(const std::vector<std::pair<AgeBand, DemographicSummary>>& bands);

}  // namespace morphconn
