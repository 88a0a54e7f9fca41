#include "morphconn/atlas.hpp"

#include <algorithm>
#include <set>

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"
#include "morphconn/sha256.hpp"

namespace morphconn {

namespace detail {
extern const std::string_view kBundledAtlasCsv;
extern const std::string_view kBundledAliasCsv;
}  // namespace detail

namespace {

constexpr std::array<std::string_view, kLobeCount> kLobeNames = {
    "Frontal", "Parietal", "Temporal", "Occipital", "Insula", "Occipitotemporal", "Limbic"};

}  // namespace

std::string_view to_string(Lobe lobe) { return kLobeNames[static_cast<std::size_t>(lobe)]; }

std::string_view to_string(Hemisphere hemi) { return hemi == Hemisphere::kLeft ? "L" : "R"; }

std::optional<Lobe> parse_lobe(std::string_view token) {
  token = csv::trim(token);
  for (std::size_t i = 0; i < kLobeCount; ++i) {
    if (kLobeNames[i] == token) return static_cast<Lobe>(i);
  }
  return std::nullopt;
}

std::optional<Hemisphere> parse_hemisphere(std::string_view token) {
  token = csv::trim(token);
  if (token == "L") return Hemisphere::kLeft;
  if (token == "R") return Hemisphere::kRight;
  return std::nullopt;
}

std::string_view Region::structure_name() const {
  std::string_view n = name;
  if (n.starts_with("lh_") || n.starts_with("rh_")) n.remove_prefix(3);
  return n;
}

bool operator==(const Region& a, const Region& b) {
  return a.index == b.index && a.name == b.name && a.hemisphere == b.hemisphere &&
         a.lobe == b.lobe;
}

bool operator==(const Atlas& a, const Atlas& b) { return a.regions_ == b.regions_; }

Atlas::Atlas(std::vector<Region> regions) {
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.index < b.index; });
  std::size_t left = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    if (i > 0 && regions[i - 1].index == r.index) {
      throw ValidationError("DuplicateIndex", "region index " + std::to_string(r.index) +
                                                  " appears more than once");
    }
    if (r.index != static_cast<int>(i)) {
      throw ValidationError("NonDenseIndex", "expected region index " + std::to_string(i) +
                                                 ", found " + std::to_string(r.index));
    }
    if (r.name.empty()) throw ValidationError("EmptyName", "region " + std::to_string(i));
    if (!by_name_.emplace(r.name, i).second) {
      throw ValidationError("DuplicateName", "region name '" + r.name + "' appears more than once");
    }
    if (r.hemisphere == Hemisphere::kLeft) ++left;
  }
  const std::size_t right = regions.size() - left;
  if ((left > right ? left - right : right - left) > 1) {
    throw ValidationError("UnbalancedHemispheres", std::to_string(left) + " left vs " +
                                                       std::to_string(right) + " right regions");
  }
  regions_ = std::move(regions);
}

std::optional<std::size_t> Atlas::find(std::string_view name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::string Atlas::to_csv() const {
  std::string out = "index,name,hemisphere,lobe\n";
  for (const Region& r : regions_) {
    out += std::to_string(r.index);
    out += ',';
    out += csv::escape(r.name);
    out += ',';
    out += to_string(r.hemisphere);
    out += ',';
    out += to_string(r.lobe);
    out += '\n';
  }
  return out;
}

std::string Atlas::hash() const { return sha256_hex(to_csv()); }

Atlas parse_atlas(std::string_view csv_text) {
  const auto rows = csv::lines(csv_text);
  if (rows.empty()) throw ValidationError("EmptyTable", "atlas file has no header");
  const auto header = csv::split_line(rows[0]);
  const std::vector<std::string> expected = {"index", "name", "hemisphere", "lobe"};
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin(),
                  [](const std::string& a, const std::string& b) { return csv::trim(a) == b; })) {
    throw ValidationError("BadHeader", "atlas header must be index,name,hemisphere,lobe");
  }
  std::vector<Region> regions;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split_line(rows[i]);
    const std::string where = "atlas line " + std::to_string(i + 1);
    if (f.size() != 4) throw ValidationError("ColumnCount", where + ": expected 4 fields");
    const auto index = csv::parse_int(f[0]);
    if (!index || *index < 0) throw ValidationError("BadIndex", where + ": '" + f[0] + "'");
    const auto hemi = parse_hemisphere(f[2]);
    if (!hemi) throw ValidationError("UnknownHemisphere", where + ": '" + f[2] + "'");
    const auto lobe = parse_lobe(f[3]);
    if (!lobe) throw ValidationError("UnknownLobe", where + ": '" + f[3] + "'");
    regions.push_back(Region{static_cast<int>(*index), std::string(csv::trim(f[1])), *hemi, *lobe});
  }
  if (regions.empty()) throw ValidationError("EmptyTable", "atlas has no regions");
  return Atlas(std::move(regions));
}

Atlas load_atlas(const std::filesystem::path& path) { return parse_atlas(csv::read_file(path)); }

const Atlas& bundled_atlas() {
  static const Atlas atlas = parse_atlas(detail::kBundledAtlasCsv);
  return atlas;
}

Atlas load_atlas_or_bundled(const std::string& path_or_keyword) {
  if (path_or_keyword == "bundled") return bundled_atlas();
  return load_atlas(path_or_keyword);
}

Atlas make_synthetic_atlas(std::size_t per_hemisphere) {
  std::vector<Region> regions;
  regions.reserve(2 * per_hemisphere);
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t i = 0; i < per_hemisphere; ++i) {
      Region r;
      r.index = static_cast<int>(regions.size());
      r.name = std::string(h == 0 ? "lh_" : "rh_") + "R" + std::to_string(i);
      r.hemisphere = h == 0 ? Hemisphere::kLeft : Hemisphere::kRight;
      r.lobe = kAllLobes[i % kLobeCount];
      regions.push_back(std::move(r));
    }
  }
  return Atlas(std::move(regions));
}

AliasTable parse_alias_table(std::string_view csv_text) {
  AliasTable table;
  const auto rows = csv::lines(csv_text);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split_line(rows[i]);
    if (f.size() != 2) {
      throw ValidationError("ColumnCount", "alias line " + std::to_string(i + 1));
    }
    table.emplace(std::string(csv::trim(f[0])), std::string(csv::trim(f[1])));
  }
  return table;
}

const AliasTable& bundled_aliases() {
  static const AliasTable table = parse_alias_table(detail::kBundledAliasCsv);
  return table;
}

}  // namespace morphconn
