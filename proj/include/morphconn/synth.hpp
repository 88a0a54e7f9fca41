#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "morphconn/atlas.hpp"
#include "morphconn/ingest.hpp"

namespace morphconn {

struct SynthBand {
  std::string label;
  double age_min = 6.0;
  double age_max = 11.0;  // ages drawn uniformly from [age_min, age_max)
  std::size_t n_td = 0;
  std::size_t n_asd = 0;
};

struct MeasureBaseline {
  double mean = 0.0;
  double sd = 1.0;
  int decimals = 4;  // output rounding
};

/// Mean shift of one (region, measure) column in the effect group, in SD units.
struct MfEffect {
  std::size_t region = 0;
  Measure measure = Measure::kArea;
  double shift_sd = 0.0;
};

/// Coupling of two regions' profiles in the effect group: region j's
/// standardized deviations become coupling * (region i's) +
/// sqrt(1 - coupling^2) * fresh noise. Marginals stay N(0, 1), so no single
/// column shifts, but the inter-regional distance distribution does.
struct McfEffect {
  std::size_t region_i = 0;
  std::size_t region_j = 0;
  double coupling = 0.0;
};

struct SynthSpec {
  Atlas atlas;
  std::uint64_t seed = 0;
  std::vector<SynthBand> bands;
  std::array<MeasureBaseline, kMeasureCount> baseline{{
      {1000.0, 200.0, 2},  // area, mm^2
      {2.5, 0.3, 4},       // thickness, mm
      {3000.0, 600.0, 2},  // volume, mm^3
      {0.12, 0.03, 5},     // mean curvature, 1/mm
  }};
  std::vector<MfEffect> mf_effects;
  std::vector<McfEffect> mcf_effects;
  Group effect_group = Group::kASD;
  double p_male = 0.8;
  double fiq_mean = 110.0;
  double fiq_sd = 13.0;
  double fiq_missing = 0.0;
  std::vector<std::string> sites = {"SYN1", "SYN2", "SYN3"};
};

/// Parses a spec document. Atlas may be "bundled", a file path (resolved
/// against `base_dir`), or {"synthetic_per_hemisphere": n}. Random planted
/// effects can be requested with "mf_random" / "mcf_random"
/// ({"count": k, "shift_sd"|"coupling": v}); they are drawn from the spec seed.
/// Throws ConfigError for invalid bounds.
SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                               std::optional<std::uint64_t> seed_override = std::nullopt);

/// Throws ConfigError when a bound is violated.
void validate(const SynthSpec& spec);

struct SynthCohort {
  Atlas atlas;
  std::vector<PhenotypeRecord> phenotypes;
  std::vector<MorphometryRecord> morphometry;
};

/// Deterministic under spec.seed.
SynthCohort generate_cohort(const SynthSpec& spec);

}  // namespace morphconn
