#include "morphconn/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"

namespace morphconn {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::kArea: return "area";
    case Measure::kThickness: return "thickness";
    case Measure::kVolume: return "volume";
    case Measure::kMeanCurv: return "meancurv";
  }
  return "?";
}

std::string_view to_string(Group g) { return g == Group::kASD ? "ASD" : "TD"; }
std::string_view to_string(Sex s) { return s == Sex::kMale ? "M" : "F"; }

namespace {

const std::vector<std::string> kPhenotypeHeader = {"SUB_ID",   "SITE_ID",  "AGE_AT_SCAN",
                                                   "SEX",      "DX_GROUP", "FIQ"};

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                   std::string_view what) {
  bool ok = got.size() == want.size();
  for (std::size_t i = 0; ok && i < got.size(); ++i) ok = csv::trim(got[i]) == want[i];
  if (!ok) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw ValidationError("BadHeader", std::string(what) + " header must be " + joined);
  }
}

}  // namespace

std::vector<PhenotypeRecord> parse_phenotypes_text(std::string_view csv_text) {
  const auto rows = csv::lines(csv_text);
  if (rows.empty()) throw ValidationError("EmptyTable", "phenotype file has no header");
  expect_header(csv::split_line(rows[0]), kPhenotypeHeader, "phenotype");

  std::vector<PhenotypeRecord> out;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split_line(rows[i]);
    const std::string row = "row " + std::to_string(i + 1);
    if (f.size() != kPhenotypeHeader.size()) {
      throw ValidationError("ColumnCount", row + ": expected 6 fields, got " + std::to_string(f.size()));
    }
    PhenotypeRecord rec;
    rec.subject_id = std::string(csv::trim(f[0]));
    if (rec.subject_id.empty()) throw ValidationError("EmptySubjectId", row);
    rec.site_id = std::string(csv::trim(f[1]));

    const auto age = csv::parse_double(f[2]);
    if (!age || !std::isfinite(*age) || *age <= 0.0) {
      throw ValidationError("BadAge", row + ": '" + f[2] + "'");
    }
    rec.age = *age;

    const auto sex = csv::trim(f[3]);
    if (sex == "M") rec.sex = Sex::kMale;
    else if (sex == "F") rec.sex = Sex::kFemale;
    else throw ValidationError("BadSex", row + ": '" + f[3] + "'");

    const auto dx = csv::trim(f[4]);
    if (dx == "ASD") rec.group = Group::kASD;
    else if (dx == "TD") rec.group = Group::kTD;
    else throw ValidationError("BadGroup", row + ": DX_GROUP '" + f[4] + "' is not ASD or TD");

    if (!csv::trim(f[5]).empty()) {
      const auto fiq = csv::parse_double(f[5]);
      if (!fiq || !std::isfinite(*fiq)) throw ValidationError("BadFIQ", row + ": '" + f[5] + "'");
      rec.fiq = *fiq;
    }
    if (!seen.insert(rec.subject_id).second) {
      throw ValidationError("DuplicateSubject", "SUB_ID '" + rec.subject_id + "' repeated at " + row);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PhenotypeRecord> parse_phenotypes(const std::filesystem::path& path) {
  return parse_phenotypes_text(csv::read_file(path));
}

std::string phenotypes_to_csv(const std::vector<PhenotypeRecord>& records) {
  std::string out = "SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\n";
  for (const auto& r : records) {
    out += csv::escape(r.subject_id) + ',' + csv::escape(r.site_id) + ',' +
           csv::format_double(r.age) + ',' + std::string(to_string(r.sex)) + ',' +
           std::string(to_string(r.group)) + ',' + (r.fiq ? csv::format_double(*r.fiq) : "") + '\n';
  }
  return out;
}

std::string wide_column_name(const Region& region, Measure m) {
  return region.name + "__" + std::string(to_string(m));
}

std::vector<MorphometryRecord> parse_morphometry_wide_text(std::string_view csv_text,
                                                           const Atlas& atlas) {
  const auto rows = csv::lines(csv_text);
  if (rows.empty()) throw ValidationError("EmptyTable", "morphometry file has no header");
  const auto header = csv::split_line(rows[0]);
  const std::size_t ncols = 1 + kMeasureCount * atlas.size();
  if (header.size() != ncols) {
    throw ValidationError("ColumnCount", "wide morphometry header has " +
                                             std::to_string(header.size()) + " columns, atlas requires " +
                                             std::to_string(ncols));
  }
  if (csv::trim(header[0]) != "SUB_ID") throw ValidationError("BadHeader", "first column must be SUB_ID");
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    for (Measure m : kAllMeasures) {
      const std::size_t c = 1 + r * kMeasureCount + static_cast<std::size_t>(m);
      const std::string want = wide_column_name(atlas[r], m);
      if (csv::trim(header[c]) != want) {
        throw ValidationError("ColumnName", "column " + std::to_string(c + 1) + " is '" + header[c] +
                                                "', expected '" + want + "'");
      }
    }
  }

  std::vector<MorphometryRecord> out;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split_line(rows[i]);
    if (f.size() != ncols) {
      throw ValidationError("ColumnCount", "row " + std::to_string(i + 1) + " has " +
                                               std::to_string(f.size()) + " fields, expected " +
                                               std::to_string(ncols));
    }
    MorphometryRecord rec;
    rec.subject_id = std::string(csv::trim(f[0]));
    rec.regions = atlas.size();
    rec.values.resize(atlas.size() * kMeasureCount);
    for (std::size_t c = 1; c < ncols; ++c) {
      const auto v = csv::parse_double(f[c]);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError("NonFiniteValue",
                              "subject '" + rec.subject_id + "', column '" + header[c] + "': '" + f[c] + "'");
      }
      rec.values[c - 1] = *v;
    }
    if (!seen.insert(rec.subject_id).second) {
      throw ValidationError("DuplicateSubject", "SUB_ID '" + rec.subject_id + "' repeated");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MorphometryRecord> parse_morphometry_wide(const std::filesystem::path& path,
                                                      const Atlas& atlas) {
  return parse_morphometry_wide_text(csv::read_file(path), atlas);
}

std::string morphometry_to_wide_csv(const std::vector<MorphometryRecord>& records,
                                    const Atlas& atlas) {
  std::string out = "SUB_ID";
  for (const Region& r : atlas) {
    for (Measure m : kAllMeasures) out += ',' + csv::escape(wide_column_name(r, m));
  }
  out += '\n';
  for (const auto& rec : records) {
    if (rec.regions != atlas.size()) {
      throw ValidationError("AtlasMismatch", "record '" + rec.subject_id + "' has " +
                                                 std::to_string(rec.regions) + " regions");
    }
    out += csv::escape(rec.subject_id);
    for (double v : rec.values) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void parse_stats_table(std::string_view text, Hemisphere hemi, const Atlas& atlas,
                       const AliasTable& aliases, MorphometryRecord& record,
                       std::vector<bool>& seen, std::string_view source) {
  // Default FreeSurfer aparc stats column order, used when no ColHeaders line.
  std::vector<std::string> columns = {"StructName", "NumVert",  "SurfArea", "GrayVol", "ThickAvg",
                                      "ThickStd",   "MeanCurv", "GausCurv", "FoldInd", "CurvInd"};
  std::map<std::string, std::size_t, std::less<>> lookup;
  for (const Region& r : atlas) {
    if (r.hemisphere == hemi) lookup.emplace(std::string(r.structure_name()), static_cast<std::size_t>(r.index));
  }

  const std::string where(source);
  std::size_t data_rows = 0;
  std::size_t line_no = 0;
  std::array<std::size_t, kMeasureCount> col{};
  std::size_t name_col = 0;
  auto resolve_columns = [&] {
    auto idx = [&](std::string_view name) {
      const auto it = std::find(columns.begin(), columns.end(), name);
      if (it == columns.end()) {
        throw ValidationError("MalformedTable", where + ": missing column " + std::string(name));
      }
      return static_cast<std::size_t>(it - columns.begin());
    };
    name_col = idx("StructName");
    col[static_cast<std::size_t>(Measure::kArea)] = idx("SurfArea");
    col[static_cast<std::size_t>(Measure::kThickness)] = idx("ThickAvg");
    col[static_cast<std::size_t>(Measure::kVolume)] = idx("GrayVol");
    col[static_cast<std::size_t>(Measure::kMeanCurv)] = idx("MeanCurv");
  };
  bool resolved = false;

  for (const std::string& raw : csv::lines(text)) {
    ++line_no;
    const std::string_view line = csv::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto tokens = csv::split_whitespace(line.substr(1));
      if (!tokens.empty() && tokens[0] == "ColHeaders") {
        columns.assign(tokens.begin() + 1, tokens.end());
        resolved = false;
      }
      continue;
    }
    if (!resolved) {
      resolve_columns();
      resolved = true;
    }
    const auto tokens = csv::split_whitespace(line);
    if (tokens.size() != columns.size()) {
      throw ValidationError("MalformedTable", where + " line " + std::to_string(line_no) + ": " +
                                                  std::to_string(tokens.size()) + " fields, expected " +
                                                  std::to_string(columns.size()));
    }
    ++data_rows;
    std::string_view name = tokens[name_col];
    auto it = lookup.find(name);
    if (it == lookup.end()) {
      const auto alias = aliases.find(name);
      if (alias != aliases.end()) it = lookup.find(alias->second);
    }
    if (it == lookup.end()) {
      throw ValidationError("UnknownRegion", where + ": StructName '" + std::string(name) +
                                                 "' is not in the atlas");
    }
    const std::size_t region = it->second;
    if (seen[region]) {
      throw ValidationError("DuplicateRegion", where + ": '" + std::string(name) + "' listed twice");
    }
    seen[region] = true;
    for (Measure m : kAllMeasures) {
      const auto& tok = tokens[col[static_cast<std::size_t>(m)]];
      const auto v = csv::parse_double(tok);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError("MalformedTable", where + " line " + std::to_string(line_no) +
                                                    ": bad value '" + tok + "'");
      }
      record.at(region, m) = *v;
    }
  }
  if (data_rows == 0) throw ValidationError("EmptyTable", where + " contains no data rows");
}

namespace {

std::filesystem::path find_stats_file(const std::filesystem::path& dir, std::string_view prefix) {
  const auto preferred = dir / (std::string(prefix) + "aparc.a2009s.stats");
  if (std::filesystem::exists(preferred)) return preferred;
  std::vector<std::filesystem::path> found;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with(prefix) && name.ends_with(".stats")) found.push_back(entry.path());
    }
  }
  if (found.size() != 1) {
    throw ValidationError("MissingStatsFile", dir.string() + ": expected exactly one " +
                                                  std::string(prefix) + "*.stats file, found " +
                                                  std::to_string(found.size()));
  }
  return found.front();
}

}  // namespace

MorphometryRecord parse_freesurfer_stats(const std::filesystem::path& dir, const Atlas& atlas,
                                         const AliasTable& aliases) {
  MorphometryRecord rec;
  rec.subject_id = dir.filename().string();
  if (rec.subject_id.empty()) rec.subject_id = dir.parent_path().filename().string();
  rec.regions = atlas.size();
  rec.values.assign(atlas.size() * kMeasureCount, 0.0);
  std::vector<bool> seen(atlas.size(), false);

  for (Hemisphere hemi : {Hemisphere::kLeft, Hemisphere::kRight}) {
    const auto path = find_stats_file(dir, hemi == Hemisphere::kLeft ? "lh." : "rh.");
    parse_stats_table(csv::read_file(path), hemi, atlas, aliases, rec, seen, path.string());
  }
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    if (!seen[r]) {
      throw ValidationError("MissingRegion", "subject '" + rec.subject_id + "': " + atlas[r].name);
    }
  }
  return rec;
}

std::vector<MorphometryRecord> parse_freesurfer_tree(const std::filesystem::path& root,
                                                     const Atlas& atlas,
                                                     const AliasTable& aliases) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<MorphometryRecord> out(dirs.size());
  std::vector<std::exception_ptr> errors(dirs.size());
  const long n = static_cast<long>(dirs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = parse_freesurfer_stats(dirs[i], atlas, aliases);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // First failure in directory order, independent of thread schedule.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  return out;
}

JoinResult build_cohort(std::vector<PhenotypeRecord> phenotypes,
                        std::vector<MorphometryRecord> morphometry, const Atlas& atlas,
                        JoinMode mode) {
  std::map<std::string, std::size_t, std::less<>> morph_index;
  for (std::size_t i = 0; i < morphometry.size(); ++i) {
    if (morphometry[i].regions != atlas.size()) {
      throw ValidationError("AtlasMismatch", "morphometry for '" + morphometry[i].subject_id +
                                                 "' does not match the atlas");
    }
    morph_index.emplace(morphometry[i].subject_id, i);
  }
  std::sort(phenotypes.begin(), phenotypes.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });

  JoinResult result;
  result.dataset.atlas = atlas;
  std::set<std::string, std::less<>> matched;
  for (auto& p : phenotypes) {
    const auto it = morph_index.find(p.subject_id);
    if (it == morph_index.end()) {
      result.dropped.push_back(p.subject_id);
      continue;
    }
    matched.insert(p.subject_id);
    result.dataset.morphometry.push_back(std::move(morphometry[it->second]));
    result.dataset.phenotypes.push_back(std::move(p));
  }
  for (const auto& [id, idx] : morph_index) {
    if (!matched.contains(id)) result.dropped.push_back(id);
  }
  std::sort(result.dropped.begin(), result.dropped.end());

  if (mode == JoinMode::kStrict && !result.dropped.empty()) {
    std::string list;
    for (const auto& id : result.dropped) list += (list.empty() ? "" : ",") + id;
    throw ValidationError("UnmatchedSubjects", "[" + list + "]");
  }
  if (result.dataset.size() == 0) throw ValidationError("EmptyJoin", "no subject appears in both inputs");
  return result;
}

}  // namespace morphconn
