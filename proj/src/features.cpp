#include "morphconn/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "morphconn/csv.hpp"
#include "morphconn/error.hpp"

namespace morphconn {

std::string_view to_string(FitScope scope) {
  return scope == FitScope::kTrainOnly ? "train_only" : "full_cohort";
}

std::optional<FitScope> parse_fit_scope(std::string_view token) {
  if (token == "train_only") return FitScope::kTrainOnly;
  if (token == "full_cohort") return FitScope::kFullCohort;
  return std::nullopt;
}

std::string_view to_string(FeatureKind kind) { return kind == FeatureKind::kMF ? "MF" : "MCF"; }

std::optional<FeatureKind> parse_feature_kind(std::string_view token) {
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mf") return FeatureKind::kMF;
  if (lower == "mcf") return FeatureKind::kMCF;
  return std::nullopt;
}

StandardizationParams fit_standardizer(const CohortDataset& dataset, const std::vector<bool>& mask,
                                       FitScope scope) {
  if (mask.size() != dataset.size()) {
    throw ValidationError("MaskMismatch", "subject mask length differs from dataset size");
  }
  const auto n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (n == 0) throw ValidationError("EmptyMask", "no subjects selected for standardization");
  if (n < 2) {
    throw ValidationError("InsufficientSubjects", "standardization needs at least 2 subjects");
  }
  const std::size_t cols = dataset.atlas.size() * kMeasureCount;
  StandardizationParams p;
  p.atlas_hash = dataset.atlas.hash();
  p.regions = dataset.atlas.size();
  p.fit_count = n;
  p.scope = scope;
  p.mean.assign(cols, 0.0);
  p.sd.assign(cols, 0.0);
  p.constant.assign(cols, false);

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!mask[i]) continue;
    const auto& v = dataset.morphometry[i].values;
    for (std::size_t c = 0; c < cols; ++c) p.mean[c] += v[c];
  }
  for (double& m : p.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!mask[i]) continue;
    const auto& v = dataset.morphometry[i].values;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = v[c] - p.mean[c];
      p.sd[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    p.sd[c] = std::sqrt(p.sd[c] / static_cast<double>(n - 1));
    p.constant[c] = p.sd[c] == 0.0;
  }
  return p;
}

StandardizedTensor apply_standardizer(const StandardizationParams& params,
                                      const CohortDataset& dataset, Execution ex) {
  if (params.regions != dataset.atlas.size() || params.atlas_hash != dataset.atlas.hash()) {
    throw ValidationError("AtlasMismatch", "standardizer was fitted on a different atlas");
  }
  StandardizedTensor t;
  t.regions = params.regions;
  const std::size_t cols = params.regions * kMeasureCount;
  t.values.resize(dataset.size() * cols);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    t.subject_ids.push_back(dataset.phenotypes[i].subject_id);
    std::copy(dataset.morphometry[i].values.begin(), dataset.morphometry[i].values.end(),
              t.values.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  if (ex == Execution::kParallel) {
    kernels::zscore_parallel(t.values, dataset.size(), cols, params.mean, params.sd);
  } else {
    kernels::zscore_serial(t.values, dataset.size(), cols, params.mean, params.sd);
  }
  return t;
}

std::string descriptor_name(const FeatureDescriptor& d, const Atlas& atlas) {
  if (d.kind == FeatureKind::kMF) {
    return "MF:" + wide_column_name(atlas[d.first], d.measure);
  }
  return "MCF:" + atlas[d.first].name + "__" + atlas[d.second].name;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::size_t>& columns) const {
  FeatureMatrix out;
  out.kind = kind;
  out.atlas_hash = atlas_hash;
  out.subject_ids = subject_ids;
  out.descriptors.reserve(columns.size());
  for (std::size_t c : columns) out.descriptors.push_back(descriptors.at(c));
  out.values.resize(rows() * columns.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out.values[r * columns.size() + k] = at(r, columns[k]);
    }
  }
  return out;
}

std::vector<FeatureDescriptor> mf_descriptors(std::size_t regions) {
  std::vector<FeatureDescriptor> out;
  out.reserve(mf_column_count(regions));
  for (std::size_t r = 0; r < regions; ++r) {
    for (Measure m : kAllMeasures) out.push_back({FeatureKind::kMF, r, 0, m});
  }
  return out;
}

std::vector<FeatureDescriptor> mcf_descriptors(std::size_t regions) {
  std::vector<FeatureDescriptor> out;
  out.reserve(mcf_column_count(regions));
  for (std::size_t i = 0; i < regions; ++i) {
    for (std::size_t j = i + 1; j < regions; ++j) {
      out.push_back({FeatureKind::kMCF, i, j, Measure::kArea});
    }
  }
  return out;
}

FeatureMatrix build_mf(const StandardizedTensor& tensor, const Atlas& atlas) {
  if (tensor.regions != atlas.size()) {
    throw ValidationError("AtlasMismatch", "tensor region count differs from atlas");
  }
  FeatureMatrix m;
  m.kind = FeatureKind::kMF;
  m.atlas_hash = atlas.hash();
  m.subject_ids = tensor.subject_ids;
  m.descriptors = mf_descriptors(atlas.size());
  // The tensor layout is already region-major, measure-minor.
  m.values = tensor.values;
  return m;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != kMeasureCount || b.size() != kMeasureCount) {
    throw ValidationError("ProfileLength", "region profiles must have 4 measures");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < kMeasureCount; ++k) {
    if (!std::isfinite(a[k]) || !std::isfinite(b[k])) {
      throw ValidationError("NonFiniteValue", "non-finite value in region profile");
    }
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

FeatureMatrix build_mcf(const StandardizedTensor& tensor, const Atlas& atlas, Execution ex) {
  if (tensor.regions != atlas.size()) {
    throw ValidationError("AtlasMismatch", "tensor region count differs from atlas");
  }
  FeatureMatrix m;
  m.kind = FeatureKind::kMCF;
  m.atlas_hash = atlas.hash();
  m.subject_ids = tensor.subject_ids;
  m.descriptors = mcf_descriptors(atlas.size());
  m.values.resize(tensor.subjects() * m.descriptors.size());
  kernels::mcf_rows(ex, tensor.values, tensor.subjects(), atlas.size(), m.values);
  return m;
}

FeatureMatrix build_features(FeatureKind kind, const StandardizedTensor& tensor,
                             const Atlas& atlas, Execution ex) {
  return kind == FeatureKind::kMF ? build_mf(tensor, atlas) : build_mcf(tensor, atlas, ex);
}

std::string feature_matrix_to_csv(const FeatureMatrix& m, const Atlas& atlas) {
  std::string out = "SUB_ID";
  for (const auto& d : m.descriptors) out += ',' + csv::escape(descriptor_name(d, atlas));
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += csv::escape(m.subject_ids[r]);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += ',';
      out += csv::format_double(m.at(r, c));
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix feature_matrix_from_csv(std::string_view text, const Atlas& atlas) {
  const auto rows = csv::lines(text);
  if (rows.empty()) throw ValidationError("EmptyTable", "feature matrix has no header");
  const auto header = csv::split_line(rows[0]);
  if (header.size() < 2 || csv::trim(header[0]) != "SUB_ID") {
    throw ValidationError("BadHeader", "feature matrix header must start with SUB_ID");
  }
  FeatureMatrix m;
  m.atlas_hash = atlas.hash();
  m.kind = std::string_view(header[1]).starts_with("MCF:") ? FeatureKind::kMCF : FeatureKind::kMF;
  const auto all = m.kind == FeatureKind::kMF ? mf_descriptors(atlas.size())
                                              : mcf_descriptors(atlas.size());
  std::map<std::string, FeatureDescriptor, std::less<>> by_name;
  for (const auto& d : all) by_name.emplace(descriptor_name(d, atlas), d);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto it = by_name.find(csv::trim(header[c]));
    if (it == by_name.end()) {
      throw ValidationError("UnknownDescriptor", "'" + header[c] + "' does not match the atlas");
    }
    m.descriptors.push_back(it->second);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split_line(rows[i]);
    if (f.size() != header.size()) {
      throw ValidationError("ColumnCount", "feature row " + std::to_string(i + 1));
    }
    m.subject_ids.emplace_back(csv::trim(f[0]));
    for (std::size_t c = 1; c < f.size(); ++c) {
      const auto v = csv::parse_double(f[c]);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError("NonFiniteValue", "feature row " + std::to_string(i + 1) + ", column " + header[c]);
      }
      m.values.push_back(*v);
    }
  }
  return m;
}

namespace {

constexpr char kCacheMagic[8] = {'M', 'C', 'O', 'N', 'N', 'F', 'M', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

bool get_string(std::istream& in, std::string& s) {
  std::uint32_t n = 0;
  if (!get(in, n) || n > (1u << 24)) return false;
  s.resize(n);
  return static_cast<bool>(in.read(s.data(), n));
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& m,
                         const std::string& key) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("WriteFailed", "cannot write cache " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  put_string(out, m.atlas_hash);
  put_string(out, key);
  put<std::uint8_t>(out, m.kind == FeatureKind::kMF ? 0 : 1);
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  for (const auto& id : m.subject_ids) put_string(out, id);
  for (const auto& d : m.descriptors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.first));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.second));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(d.measure));
  }
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!out) throw RuntimeFailure("WriteFailed", "short write to cache " + path.string());
}

std::optional<FeatureMatrix> read_feature_cache(const std::filesystem::path& path,
                                                const Atlas& atlas, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kCacheMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    return std::nullopt;
  }
  FeatureMatrix m;
  std::string stored_key;
  std::uint8_t kind = 0;
  std::uint64_t rows = 0, cols = 0;
  if (!get_string(in, m.atlas_hash) || !get_string(in, stored_key) || !get(in, kind) ||
      !get(in, rows) || !get(in, cols)) {
    return std::nullopt;
  }
  if (m.atlas_hash != atlas.hash() || stored_key != key) return std::nullopt;
  m.kind = kind == 0 ? FeatureKind::kMF : FeatureKind::kMCF;
  m.subject_ids.resize(rows);
  for (auto& id : m.subject_ids) {
    if (!get_string(in, id)) return std::nullopt;
  }
  m.descriptors.resize(cols);
  for (auto& d : m.descriptors) {
    std::uint32_t a = 0, b = 0;
    std::uint8_t meas = 0;
    if (!get(in, a) || !get(in, b) || !get(in, meas)) return std::nullopt;
    if (a >= atlas.size() || b >= atlas.size() || meas >= kMeasureCount) return std::nullopt;
    d = FeatureDescriptor{m.kind, a, b, static_cast<Measure>(meas)};
  }
  m.values.resize(rows * cols);
  if (!in.read(reinterpret_cast<char*>(m.values.data()),
               static_cast<std::streamsize>(m.values.size() * sizeof(double)))) {
    return std::nullopt;
  }
  return m;
}

}  // namespace morphconn
