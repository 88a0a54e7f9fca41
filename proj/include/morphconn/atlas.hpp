#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphconn {

enum class Hemisphere { kLeft, kRight };

enum class Lobe {
  kFrontal,
  kParietal,
  kTemporal,
  kOccipital,
  kInsula,
  kOccipitotemporal,
  kLimbic,
};

inline constexpr std::size_t kLobeCount = 7;
inline constexpr std::array<Lobe, kLobeCount> kAllLobes = {
    Lobe::kFrontal, Lobe::kParietal,         Lobe::kTemporal, Lobe::kOccipital,
    Lobe::kInsula,  Lobe::kOccipitotemporal, Lobe::kLimbic};

std::string_view to_string(Lobe lobe);
std::string_view to_string(Hemisphere hemi);  // "L" / "R"
std::optional<Lobe> parse_lobe(std::string_view token);
std::optional<Hemisphere> parse_hemisphere(std::string_view token);

struct Region {
  int index = 0;
  std::string name;  // e.g. "lh_G_front_sup"
  Hemisphere hemisphere = Hemisphere::kLeft;
  Lobe lobe = Lobe::kFrontal;

  /// Name without the "lh_"/"rh_" prefix; this is what FreeSurfer stats
  /// tables call StructName.
  std::string_view structure_name() const;
};

/// Ordered region registry. Regions are stored in index order and indices are
/// dense 0..R-1.
class Atlas {
 public:
  Atlas() = default;

  /// Validates and takes ownership. Throws ValidationError on duplicate or
  /// non-dense indices, duplicate names, or unbalanced hemispheres.
  explicit Atlas(std::vector<Region> regions);

  std::size_t size() const noexcept { return regions_.size(); }
  const Region& operator[](std::size_t i) const { return regions_[i]; }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  auto begin() const noexcept { return regions_.begin(); }
  auto end() const noexcept { return regions_.end(); }

  std::optional<std::size_t> find(std::string_view name) const;

  /// Canonical CSV text (header + one row per region, LF line endings).
  std::string to_csv() const;

  /// SHA-256 of `to_csv()`; identifies the atlas in caches and manifests.
  std::string hash() const;

  friend bool operator==(const Atlas& a, const Atlas& b);

 private:
  std::vector<Region> regions_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

bool operator==(const Region& a, const Region& b);

Atlas parse_atlas(std::string_view csv_text);
Atlas load_atlas(const std::filesystem::path& path);

/// The compiled-in 148-region Destrieux atlas (74 per hemisphere) with an
/// editable, reconstructed lobe assignment.
const Atlas& bundled_atlas();

/// Resolves "bundled" to `bundled_atlas()`, otherwise loads the file.
Atlas load_atlas_or_bundled(const std::string& path_or_keyword);

/// Synthetic atlas with `per_hemisphere` regions per side, lobes assigned
/// round-robin. Used for scale tests and null-calibration cohorts.
Atlas make_synthetic_atlas(std::size_t per_hemisphere);

/// alias StructName -> canonical StructName.
using AliasTable = std::map<std::string, std::string, std::less<>>;

AliasTable parse_alias_table(std::string_view csv_text);
const AliasTable& bundled_aliases();

}  // namespace morphconn
