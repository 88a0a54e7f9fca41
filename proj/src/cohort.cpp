#include "morphconn/cohort.hpp"

#include <cmath>
#include <cstdio>

#include "morphconn/error.hpp"

namespace morphconn {

std::vector<AgeBand> default_bands() {
  return {
      AgeBand{"6to11", 6.0, 11.0, false},
      AgeBand{"11to18", 11.0, 18.0, true},
      AgeBand{"6to18", 6.0, 18.0, true},
  };
}

AgeBand band_by_label(const std::string& label) {
  for (const auto& b : default_bands()) {
    if (b.label == label) return b;
  }
  throw ConfigError("UnknownBand", "age band '" + label + "' (expected 6to11, 11to18 or 6to18)");
}

CohortDataset stratify(const CohortDataset& dataset, const AgeBand& band) {
  CohortDataset out;
  out.atlas = dataset.atlas;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (band.contains(dataset.phenotypes[i].age)) {
      out.phenotypes.push_back(dataset.phenotypes[i]);
      out.morphometry.push_back(dataset.morphometry[i]);
    }
  }
  return out;
}

namespace {

GroupSummary summarize(const std::vector<PhenotypeRecord>& phenotypes, Group group) {
  GroupSummary s;
  double sum = 0.0;
  for (const auto& p : phenotypes) {
    if (p.group != group) continue;
    ++s.count;
    (p.sex == Sex::kMale ? s.male : s.female)++;
    if (p.fiq) {
      ++s.fiq_n;
      sum += *p.fiq;
    }
  }
  if (s.fiq_n == 0) return s;
  const double mean = sum / static_cast<double>(s.fiq_n);
  s.fiq_mean = mean;
  if (s.fiq_n >= 2) {
    double ss = 0.0;
    for (const auto& p : phenotypes) {
      if (p.group == group && p.fiq) ss += (*p.fiq - mean) * (*p.fiq - mean);
    }
    s.fiq_sd = std::sqrt(ss / static_cast<double>(s.fiq_n - 1));
  }
  return s;
}

nlohmann::ordered_json group_json(const GroupSummary& g) {
  nlohmann::ordered_json j;
  j["count"] = g.count;
  j["male"] = g.male;
  j["female"] = g.female;
  j["fiq_n"] = g.fiq_n;
  if (g.fiq_mean) j["fiq_mean"] = *g.fiq_mean;
  if (g.fiq_sd) j["fiq_sd"] = *g.fiq_sd;
  return j;
}

std::string fiq_cell(const GroupSummary& g) {
  char buf[64];
  if (!g.fiq_mean) return "n/a";
  if (!g.fiq_sd) {
    std::snprintf(buf, sizeof buf, "%.1f", *g.fiq_mean);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f +/- %.1f", *g.fiq_mean, *g.fiq_sd);
  }
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

DemographicSummary demographic_summary(const std::vector<PhenotypeRecord>& phenotypes) {
  return {summarize(phenotypes, Group::kTD), summarize(phenotypes, Group::kASD)};
}

DemographicSummary demographic_summary(const CohortDataset& dataset) {
  return demographic_summary(dataset.phenotypes);
}

nlohmann::ordered_json to_json(const DemographicSummary& summary) {
  nlohmann::ordered_json j;
  j["TD"] = group_json(summary.td);
  j["ASD"] = group_json(summary.asd);
  return j;
}

std::string demographic_table(const std::vector<std::pair<AgeBand, DemographicSummary>>& bands) {
  constexpr std::size_t kLabel = 22;
  constexpr std::size_t kCell = 18;
  std::string header1 = pad("", kLabel);
  std::string header2 = pad("", kLabel);
  std::string count = pad("Count", kLabel);
  std::string gender = pad("Gender", kLabel);
  std::string fiq = pad("FIQ (Mean +/- SD)", kLabel);
  for (const auto& [band, s] : bands) {
    header1 += pad(band.label + " years", 2 * kCell);
    header2 += pad("TD", kCell) + pad("ASD", kCell);
    count += pad(std::to_string(s.td.count), kCell) + pad(std::to_string(s.asd.count), kCell);
    gender += pad(std::to_string(s.td.male) + " M " + std::to_string(s.td.female) + " F", kCell) +
              pad(std::to_string(s.asd.male) + " M " + std::to_string(s.asd.female) + " F", kCell);
    fiq += pad(fiq_cell(s.td), kCell) + pad(fiq_cell(s.asd), kCell);
  }
  auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };
  return rstrip(header1) + '\n' + rstrip(header2) + '\n' + rstrip(count) + '\n' + rstrip(gender) +
         '\n' + rstrip(fiq) + '\n';
}

}  // namespace morphconn
