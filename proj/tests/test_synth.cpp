#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "morphconn/cohort.hpp"
#include "morphconn/experiment.hpp"
#include "morphconn/features.hpp"
#include "morphconn/select.hpp"
#include "morphconn/stats.hpp"
#include "morphconn/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace morphconn;
using morphconn::testing::expect_error;
using nlohmann::json;

namespace {

json one_band(std::size_t n_td, std::size_t n_asd) {
  return json::array({{{"label", "all"}, {"age_min", 6.0}, {"age_max", 17.9}, {"n_td", n_td}, {"n_asd", n_asd}}});
}

CohortDataset to_dataset(const SynthCohort& c) {
  return build_cohort(c.phenotypes, c.morphometry, c.atlas).dataset;
}

/// Max |F_n(p) - p| of the empirical CDF of `p` against U(0, 1).
double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
  }
  return d;
}

std::vector<bool> all_rows(std::size_t n) { return std::vector<bool>(n, true); }

}  // namespace

TEST(Synth, SameSeedGivesIdenticalFiles) {
  const json j = {{"atlas", "bundled"}, {"seed", 5}, {"bands", one_band(10, 12)},
                  {"mf_random", {{"count", 4}, {"shift_sd", 1.0}}},
                  {"mcf_random", {{"count", 3}, {"coupling", 0.5}}}, {"fiq_missing", 0.2}};
  const auto a = generate_cohort(synth_spec_from_json(j));
  const auto b = generate_cohort(synth_spec_from_json(j));
  EXPECT_EQ(phenotypes_to_csv(a.phenotypes), phenotypes_to_csv(b.phenotypes));
  EXPECT_EQ(morphometry_to_wide_csv(a.morphometry, a.atlas), morphometry_to_wide_csv(b.morphometry, b.atlas));
  const auto c = generate_cohort(synth_spec_from_json(j, {}, 6));
  EXPECT_NE(morphometry_to_wide_csv(a.morphometry, a.atlas), morphometry_to_wide_csv(c.morphometry, c.atlas));
}

TEST(Synth, OutputParsesBackAndHonoursBands) {
  const json j = {{"atlas", {{"synthetic_per_hemisphere", 3}}}, {"seed", 1},
                  {"bands", json::array({{{"label", "a"}, {"age_min", 6.0}, {"age_max", 11.0}, {"n_td", 4}, {"n_asd", 5}},
                                         {{"label", "b"}, {"age_min", 11.0}, {"age_max", 18.0}, {"n_td", 6}, {"n_asd", 7}}})}};
  const auto c = generate_cohort(synth_spec_from_json(j));
  ASSERT_EQ(c.phenotypes.size(), 22u);
  EXPECT_EQ(parse_phenotypes_text(phenotypes_to_csv(c.phenotypes)), c.phenotypes);
  EXPECT_EQ(parse_morphometry_wide_text(morphometry_to_wide_csv(c.morphometry, c.atlas), c.atlas), c.morphometry);
  std::size_t young = 0, asd = 0;
  for (const auto& p : c.phenotypes) {
    EXPECT_GE(p.age, 6.0);
    EXPECT_LT(p.age, 18.0);
    young += p.age < 11.0;
    asd += p.group == Group::kASD;
  }
  EXPECT_EQ(young, 9u);
  EXPECT_EQ(asd, 12u);
}

TEST(Synth, NullSpecGivesUniformPValues) {
  // 125 regions per side x 4 measures = 1000 raw columns.
  const json j = {{"atlas", {{"synthetic_per_hemisphere", 125}}}, {"seed", 11}, {"bands", one_band(100, 100)}};
  const auto c = generate_cohort(synth_spec_from_json(j));
  ASSERT_EQ(c.atlas.size() * kMeasureCount, 1000u);
  std::vector<double> p;
  for (std::size_t col = 0; col < 1000; ++col) {
    std::vector<double> asd, td;
    for (std::size_t s = 0; s < c.phenotypes.size(); ++s) {
      (c.phenotypes[s].group == Group::kASD ? asd : td).push_back(c.morphometry[s].values[col]);
    }
    const auto w = welch_t(asd, td);
    p.push_back(t_two_sided_p(w.t, w.df));
  }
  EXPECT_LT(ks_uniform(p), 0.05);
}

TEST(Synth, McfEffectLeavesMfUninformativeButMcfFindsPairs) {
  const json j = {{"atlas", "bundled"}, {"seed", 21}, {"bands", one_band(150, 150)},
                  {"mcf_random", {{"count", 20}, {"coupling", 0.8}}}};
  const auto spec = synth_spec_from_json(j);
  ASSERT_EQ(spec.mcf_effects.size(), 20u);
  const auto data = to_dataset(generate_cohort(spec));
  std::vector<Group> labels;
  for (const auto& ph : data.phenotypes) labels.push_back(ph.group);
  const auto params = fit_standardizer(data, all_rows(data.size()), FitScope::kFullCohort);
  const auto tensor = apply_standardizer(params, data);

  const auto mf = select_features(build_mf(tensor, data.atlas), labels, 0.05);
  const double rate = static_cast<double>(mf.selected_count) / mf.results.size();
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.07);

  const auto mcf = select_features(build_mcf(tensor, data.atlas), labels, 0.05);
  const auto desc = mcf_descriptors(data.atlas.size());
  for (const auto& e : spec.mcf_effects) {
    const auto lo = std::min(e.region_i, e.region_j), hi = std::max(e.region_i, e.region_j);
    const auto it = std::find(desc.begin(), desc.end(), FeatureDescriptor{FeatureKind::kMCF, lo, hi, Measure::kArea});
    ASSERT_NE(it, desc.end());
    EXPECT_TRUE(mcf.results[static_cast<std::size_t>(it - desc.begin())].selected) << lo << "-" << hi;
  }
}

TEST(Synth, PlantedMfShiftIsSeparable) {
  const json j = {{"atlas", "bundled"}, {"seed", 31}, {"bands", one_band(150, 150)},
                  {"mf_random", {{"count", 20}, {"shift_sd", 3.0}}}};
  const auto spec = synth_spec_from_json(j);
  const auto data = to_dataset(generate_cohort(spec));

  // Nearest-centroid on the planted columns confirms the construction is separable.
  ExperimentConfig cfg;
  cfg.master_seed = 3;
  const AgeBand band{"all", 6.0, 18.0, true};
  const auto cell = prepare_cell(data, band, FeatureKind::kMF, cfg);
  std::vector<std::vector<double>> train, test;
  std::vector<int> ytrain, ytest;
  for (std::size_t r = 0; r < cell.features.rows(); ++r) {
    std::vector<double> row;
    for (const auto& e : spec.mf_effects) {
      row.push_back(cell.features.at(r, e.region * kMeasureCount + static_cast<std::size_t>(e.measure)));
    }
    const int y = cell.labels[r] == Group::kASD ? 1 : 0;
    (cell.train_mask[r] ? train : test).push_back(row);
    (cell.train_mask[r] ? ytrain : ytest).push_back(y);
  }
  const auto pred = oracle::nearest_centroid(train, ytrain, test);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == ytest[i];
  EXPECT_GE(static_cast<double>(hit) / pred.size(), 0.95);

  const auto report = run_experiment(data, band, FeatureKind::kMF, cfg);
  EXPECT_GE(report.metrics.accuracy, 0.90);
}

TEST(Synth, SeedRequired) {
  const json j = {{"atlas", "bundled"}, {"bands", one_band(3, 3)}};
  expect_error<ConfigError>([&] { synth_spec_from_json(j); }, "MissingSeed");
  EXPECT_EQ(synth_spec_from_json(j, {}, 9).seed, 9u);
}

TEST(Synth, InvalidSpecsRejected) {
  const auto bad = [](json j) {
    j["seed"] = 1;
    if (!j.contains("bands")) j["bands"] = one_band(3, 3);
    expect_error<ConfigError>([&] { generate_cohort(synth_spec_from_json(j)); }, "BadSynthSpec");
  };
  bad({{"bands", one_band(0, 3)}});
  bad({{"bands", json::array()}});
  bad({{"bands", json::array({{{"label", "x"}, {"age_min", 12.0}, {"age_max", 8.0}, {"n_td", 2}, {"n_asd", 2}}})}});
  bad({{"mf_effects", json::array({{{"region", 999}, {"measure", "area"}, {"shift_sd", 1.0}}})}});
  bad({{"mf_effects", json::array({{{"region", 0}, {"measure", "girth"}, {"shift_sd", 1.0}}})}});
  bad({{"mcf_effects", json::array({{{"region_i", 0}, {"region_j", 1}, {"coupling", 1.5}}})}});
  bad({{"mcf_effects", json::array({{{"region_i", 2}, {"region_j", 2}, {"coupling", 0.5}}})}});
  bad({{"mf_random", {{"count", 100000}, {"shift_sd", 1.0}}}});
  bad({{"p_male", 1.5}});
  bad({{"sites", json::array()}});
  bad({{"effect_group", "XYZ"}});
  bad({{"atlas", {{"synthetic_per_hemisphere", 0}}}});
}

TEST(Synth, NamedRegionsAndEffectGroup) {
  const json j = {{"atlas", "bundled"}, {"seed", 2}, {"bands", one_band(3, 3)}, {"effect_group", "TD"},
                  {"mf_effects", json::array({{{"region", "lh_G_and_S_frontomargin"}, {"measure", "thickness"}, {"shift_sd", 2.0}}})}};
  const auto spec = synth_spec_from_json(j);
  ASSERT_EQ(spec.mf_effects.size(), 1u);
  EXPECT_EQ(spec.mf_effects[0].region, 0u);
  EXPECT_EQ(spec.mf_effects[0].measure, Measure::kThickness);
  EXPECT_EQ(spec.effect_group, Group::kTD);
}
