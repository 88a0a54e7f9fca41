#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morphconn/atlas.hpp"

namespace morphconn {

enum class Sex { kMale, kFemale };
enum class Group { kTD, kASD };

inline constexpr std::size_t kMeasureCount = 4;

/// Column order of every morphometry matrix.
enum class Measure { kArea = 0, kThickness = 1, kVolume = 2, kMeanCurv = 3 };

inline constexpr std::array<Measure, kMeasureCount> kAllMeasures = {
    Measure::kArea, Measure::kThickness, Measure::kVolume, Measure::kMeanCurv};

std::string_view to_string(Measure m);   // "area", "thickness", "volume", "meancurv"
std::string_view to_string(Group g);     // "TD", "ASD"
std::string_view to_string(Sex s);       // "M", "F"

struct PhenotypeRecord {
  std::string subject_id;
  std::string site_id;
  double age = 0.0;
  Sex sex = Sex::kMale;
  Group group = Group::kTD;
  std::optional<double> fiq;

  friend bool operator==(const PhenotypeRecord&, const PhenotypeRecord&) = default;
};

/// R x 4 matrix of raw measures, row-major in atlas index order.
struct MorphometryRecord {
  std::string subject_id;
  std::size_t regions = 0;
  std::vector<double> values;

  double at(std::size_t region, Measure m) const {
    return values[region * kMeasureCount + static_cast<std::size_t>(m)];
  }
  double& at(std::size_t region, Measure m) {
    return values[region * kMeasureCount + static_cast<std::size_t>(m)];
  }

  friend bool operator==(const MorphometryRecord&, const MorphometryRecord&) = default;
};

/// Joined phenotype + morphometry, sorted by subject_id; element i of each
/// vector refers to the same subject.
struct CohortDataset {
  Atlas atlas;
  std::vector<PhenotypeRecord> phenotypes;
  std::vector<MorphometryRecord> morphometry;

  std::size_t size() const noexcept { return phenotypes.size(); }
};

enum class JoinMode { kStrict, kLenient };

struct JoinResult {
  CohortDataset dataset;
  std::vector<std::string> dropped;  // subjects present in only one input
};

std::vector<PhenotypeRecord> parse_phenotypes_text(std::string_view csv_text);
std::vector<PhenotypeRecord> parse_phenotypes(const std::filesystem::path& path);
std::string phenotypes_to_csv(const std::vector<PhenotypeRecord>& records);

/// Wide CSV column name for a region measure: "{region}__{measure}".
std::string wide_column_name(const Region& region, Measure m);

std::vector<MorphometryRecord> parse_morphometry_wide_text(std::string_view csv_text,
                                                           const Atlas& atlas);
std::vector<MorphometryRecord> parse_morphometry_wide(const std::filesystem::path& path,
                                                      const Atlas& atlas);
std::string morphometry_to_wide_csv(const std::vector<MorphometryRecord>& records,
                                    const Atlas& atlas);

/// Parses one hemisphere's stats table into `record` rows for that hemisphere.
/// Exposed for testing; `parse_freesurfer_stats` is the normal entry point.
void parse_stats_table(std::string_view text, Hemisphere hemi, const Atlas& atlas,
                       const AliasTable& aliases, MorphometryRecord& record,
                       std::vector<bool>& seen, std::string_view source);

/// Reads `lh.aparc.a2009s.stats` and `rh.aparc.a2009s.stats` (or the single
/// `lh.*.stats` / `rh.*.stats` present) from a subject directory. The
/// subject id is the directory name.
MorphometryRecord parse_freesurfer_stats(const std::filesystem::path& dir, const Atlas& atlas,
                                         const AliasTable& aliases = bundled_aliases());

/// Parses every subdirectory of `root` as a subject, in parallel. Output is
/// sorted by subject id.
std::vector<MorphometryRecord> parse_freesurfer_tree(const std::filesystem::path& root,
                                                     const Atlas& atlas,
                                                     const AliasTable& aliases = bundled_aliases());

JoinResult build_cohort(std::vector<PhenotypeRecord> phenotypes,
                        std::vector<MorphometryRecord> morphometry, const Atlas& atlas,
                        JoinMode mode = JoinMode::kStrict);

}  // namespace morphconn
