#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "morphconn/cohort.hpp"
#include "morphconn/experiment.hpp"
#include "morphconn/ingest.hpp"

namespace morphconn::cli {

inline constexpr const char* kToolVersion = MORPHCONN_VERSION;

/// Fully resolved run configuration. Built from three layers, later layers
/// winning: built-in defaults, the JSON config file, command-line flags.
struct RunConfig {
  std::string atlas = "bundled";
  std::optional<std::filesystem::path> phenotypes;
  std::optional<std::filesystem::path> morphometry;
  std::optional<std::filesystem::path> stats_dir;
  std::filesystem::path output_dir = "out";
  JoinMode join = JoinMode::kStrict;
  std::vector<AgeBand> bands;
  std::vector<FeatureKind> kinds;
  ExperimentConfig experiment;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

/// Built-in defaults as a config document.
nlohmann::ordered_json default_config();

/// Reads a config file. Relative paths are resolved against the file's
/// directory. A run manifest is accepted too: its embedded config is used.
nlohmann::ordered_json load_config_file(const std::filesystem::path& path);

/// Converts an effective config document into a RunConfig. Throws
/// ConfigError naming the offending field.
RunConfig parse_run_config(const nlohmann::ordered_json& effective);

/// Throws ConfigError("MissingSeed") when no seed is configured, and
/// ConfigError naming the field when an input path is missing.
void require_inputs(const RunConfig& config, bool need_data = true);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace morphconn::cli
