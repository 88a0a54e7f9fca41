#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "morphconn/features.hpp"
#include "morphconn/kernels.hpp"
#include "support.hpp"

using namespace morphconn;
using morphconn::testing::expect_error;
using morphconn::testing::random_dataset;

namespace {

CohortDataset small_dataset(std::size_t per_hemi, std::size_t n, std::uint64_t seed) {
  std::vector<double> ages(n, 9.0);
  return random_dataset(make_synthetic_atlas(per_hemi), ages,
                        morphconn::testing::alternating_groups(n), seed);
}

std::vector<bool> all_rows(std::size_t n) { return std::vector<bool>(n, true); }

StandardizedTensor random_tensor(std::size_t subjects, std::size_t regions, std::uint64_t seed) {
  StandardizedTensor t;
  t.regions = regions;
  Rng rng(seed);
  for (std::size_t s = 0; s < subjects; ++s) t.subject_ids.push_back("s" + std::to_string(s));
  t.values.resize(subjects * regions * kMeasureCount);
  for (double& v : t.values) v = rng.normal();
  return t;
}

/// Independent recomputation of one MCF value straight from the definition.
double mcf_oracle(const StandardizedTensor& t, std::size_t s, std::size_t i, std::size_t j) {
  double sum = 0.0;
  for (std::size_t m = 0; m < kMeasureCount; ++m) {
    const double d = t.values[(s * t.regions + i) * kMeasureCount + m] -
                     t.values[(s * t.regions + j) * kMeasureCount + m];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

TEST(Standardizer, MeanAndSampleSd) {
  auto d = small_dataset(1, 3, 1);
  for (std::size_t s = 0; s < 3; ++s) d.morphometry[s].at(0, Measure::kArea) = 1.0 + s;
  for (std::size_t s = 0; s < 3; ++s) d.morphometry[s].at(1, Measure::kVolume) = 5.0;
  const auto p = fit_standardizer(d, all_rows(3));
  EXPECT_DOUBLE_EQ(p.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(p.sd[0], 1.0);
  const std::size_t vol = 1 * kMeasureCount + static_cast<std::size_t>(Measure::kVolume);
  EXPECT_EQ(p.sd[vol], 0.0);
  EXPECT_TRUE(p.constant[vol]);
  EXPECT_FALSE(p.constant[0]);
  EXPECT_EQ(p.fit_count, 3u);

  const auto z = apply_standardizer(p, d);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(z.values[s * 2 * kMeasureCount + vol], 0.0);
}

TEST(Standardizer, MaskErrors) {
  const auto d = small_dataset(1, 4, 2);
  expect_error<ValidationError>([&] { fit_standardizer(d, {true, false, false, false}); },
                                "InsufficientSubjects");
  expect_error<ValidationError>([&] { fit_standardizer(d, std::vector<bool>(4, false)); }, "EmptyMask");
  expect_error<ValidationError>([&] { fit_standardizer(d, std::vector<bool>(3, true)); }, "MaskMismatch");
}

TEST(Standardizer, OwnFitSetHasZeroMeanUnitSd) {
  const auto d = small_dataset(4, 25, 3);
  const auto p = fit_standardizer(d, all_rows(d.size()));
  const auto z = apply_standardizer(p, d);
  const std::size_t cols = d.atlas.size() * kMeasureCount;
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t s = 0; s < d.size(); ++s) sum += z.values[s * cols + c];
    const double mean = sum / d.size();
    for (std::size_t s = 0; s < d.size(); ++s) sum2 += std::pow(z.values[s * cols + c] - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(sum2 / (d.size() - 1)), 1.0, 1e-9);
  }
}

TEST(Standardizer, ValueAtMeanMapsToZero) {
  auto d = small_dataset(1, 5, 4);
  const auto p = fit_standardizer(d, all_rows(5));
  d.morphometry[0].at(0, Measure::kThickness) = p.mean[1];
  EXPECT_EQ(apply_standardizer(p, d).values[1], 0.0);
}

TEST(Standardizer, TrainMaskOnlyUsesTrainRows) {
  auto d = small_dataset(1, 6, 5);
  std::vector<bool> mask = {true, true, true, false, false, false};
  const auto p1 = fit_standardizer(d, mask);
  for (std::size_t s = 3; s < 6; ++s) {
    for (double& v : d.morphometry[s].values) v = 1e6;
  }
  const auto p2 = fit_standardizer(d, mask);
  EXPECT_EQ(p1.mean, p2.mean);
  EXPECT_EQ(p1.sd, p2.sd);
}

TEST(Standardizer, InvariantUnderShiftAndPositiveScale) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = small_dataset(3, 12, 100 + trial);
    const auto base = apply_standardizer(fit_standardizer(d, all_rows(12)), d);
    const std::size_t region = rng.uniform_index(d.atlas.size());
    const auto m = kAllMeasures[rng.uniform_index(kMeasureCount)];
    const double shift = (rng.uniform01() - 0.5) * 1e3;
    const double scale = std::exp(rng.normal() * 2);
    auto shifted = d;
    auto scaled = d;
    for (std::size_t s = 0; s < d.size(); ++s) {
      shifted.morphometry[s].at(region, m) += shift;
      scaled.morphometry[s].at(region, m) *= scale;
    }
    const auto zs = apply_standardizer(fit_standardizer(shifted, all_rows(12)), shifted);
    const auto zc = apply_standardizer(fit_standardizer(scaled, all_rows(12)), scaled);
    for (std::size_t i = 0; i < base.values.size(); ++i) {
      ASSERT_NEAR(zs.values[i], base.values[i], 1e-9);
      ASSERT_NEAR(zc.values[i], base.values[i], 1e-9);
    }
  }
}

TEST(Standardizer, AtlasMismatch) {
  const auto d = small_dataset(2, 5, 7);
  const auto other = small_dataset(3, 5, 7);
  const auto p = fit_standardizer(d, all_rows(5));
  expect_error<ValidationError>([&] { apply_standardizer(p, other); }, "AtlasMismatch");
}

TEST(Euclidean, AnalyticCases) {
  const std::array<double, 4> zero{0, 0, 0, 0};
  const std::array<double, 4> a{3, 4, 0, 0};
  const std::array<double, 4> ones{1, 1, 1, 1};
  EXPECT_EQ(euclidean(a, a), 0.0);
  EXPECT_EQ(euclidean(a, zero), 5.0);
  EXPECT_EQ(euclidean(ones, zero), 2.0);
}

TEST(Euclidean, Errors) {
  const std::array<double, 4> ok{0, 0, 0, 0};
  const std::array<double, 4> bad{0, std::numeric_limits<double>::quiet_NaN(), 0, 0};
  const std::array<double, 3> short_profile{0, 0, 0};
  expect_error<ValidationError>([&] { euclidean(ok, bad); }, "NonFiniteValue");
  expect_error<ValidationError>([&] { euclidean(ok, short_profile); }, "ProfileLength");
}

TEST(Euclidean, MetricProperties) {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    std::array<double, 4> a{}, b{}, c{};
    for (auto* v : {&a, &b, &c}) {
      for (double& x : *v) x = rng.normal() * 3;
    }
    EXPECT_EQ(euclidean(a, b), euclidean(b, a));
    EXPECT_EQ(euclidean(a, a), 0.0);
    const double rhs = euclidean(a, b) + euclidean(b, c);
    EXPECT_LE(euclidean(a, c), rhs * (1 + 1e-12));
  }
}

TEST(FeatureCounts, Identities) {
  EXPECT_EQ(mf_column_count(148), 592u);
  EXPECT_EQ(mcf_column_count(148), 10878u);
  EXPECT_EQ(mf_column_count(3), 12u);
  EXPECT_EQ(mcf_column_count(4), 6u);
  for (std::size_t r = 2; r <= 148; ++r) {
    EXPECT_EQ(mf_descriptors(r).size(), 4 * r);
    EXPECT_EQ(mcf_descriptors(r).size(), r * (r - 1) / 2);
  }
}

TEST(FeatureCounts, DescriptorOrder) {
  const auto mf = mf_descriptors(2);
  EXPECT_EQ(mf[0].first, 0u);
  EXPECT_EQ(mf[0].measure, Measure::kArea);
  EXPECT_EQ(mf[3].measure, Measure::kMeanCurv);
  EXPECT_EQ(mf[4].first, 1u);
  const auto mcf = mcf_descriptors(4);
  const std::vector<std::pair<std::size_t, std::size_t>> expected = {{0, 1}, {0, 2}, {0, 3},
                                                                     {1, 2}, {1, 3}, {2, 3}};
  for (std::size_t k = 0; k < mcf.size(); ++k) {
    EXPECT_EQ(mcf[k].first, expected[k].first);
    EXPECT_EQ(mcf[k].second, expected[k].second);
    EXPECT_LT(mcf[k].first, mcf[k].second);
  }
}

TEST(BuildFeatures, MfCopiesTensorRegionMajor) {
  const Atlas a = make_synthetic_atlas(2);
  const auto t = random_tensor(3, a.size(), 9);
  const auto m = build_mf(t, a);
  ASSERT_EQ(m.cols(), 16u);
  ASSERT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.values, t.values);
  EXPECT_EQ(m.kind, FeatureKind::kMF);
  EXPECT_EQ(m.atlas_hash, a.hash());
}

TEST(BuildFeatures, EmptyCohortKeepsDescriptors) {
  const Atlas a = make_synthetic_atlas(2);
  const StandardizedTensor t{{}, a.size(), {}};
  EXPECT_EQ(build_mf(t, a).cols(), 16u);
  EXPECT_EQ(build_mf(t, a).rows(), 0u);
  EXPECT_EQ(build_mcf(t, a).cols(), 6u);
}

TEST(BuildFeatures, BundledAtlasColumnCounts) {
  const auto t = random_tensor(2, 148, 10);
  EXPECT_EQ(build_mf(t, bundled_atlas()).cols(), 592u);
  EXPECT_EQ(build_mcf(t, bundled_atlas()).cols(), 10878u);
}

TEST(BuildFeatures, McfMatchesDoubleLoopOracleExactly) {
  for (std::size_t per_hemi = 1; per_hemi <= 3; ++per_hemi) {
    const Atlas a = make_synthetic_atlas(per_hemi);
    const auto t = random_tensor(7, a.size(), 20 + per_hemi);
    for (Execution ex : {Execution::kSerial, Execution::kParallel}) {
      const auto m = build_mcf(t, a, ex);
      std::size_t col = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j, ++col) {
          for (std::size_t s = 0; s < t.subjects(); ++s) {
            ASSERT_EQ(m.at(s, col), mcf_oracle(t, s, i, j));
          }
        }
      }
    }
  }
}

TEST(BuildFeatures, IdenticalProfilesGiveZeroRow) {
  const Atlas a = make_synthetic_atlas(3);
  auto t = random_tensor(2, a.size(), 11);
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t m = 0; m < kMeasureCount; ++m) {
      t.values[(0 * a.size() + r) * kMeasureCount + m] = static_cast<double>(m) * 0.5;
    }
  }
  const auto mcf = build_mcf(t, a);
  for (std::size_t c = 0; c < mcf.cols(); ++c) {
    EXPECT_EQ(mcf.at(0, c), 0.0);
    EXPECT_GT(mcf.at(1, c), 0.0);
  }
}

TEST(Kernels, SerialAndParallelAgreeBitwise) {
  const std::size_t subjects = 13, regions = 37;
  const auto t = random_tensor(subjects, regions, 12);
  std::vector<double> a(subjects * mcf_column_count(regions)), b(a.size());
  kernels::mcf_rows_serial(t.values, subjects, regions, a);
  kernels::mcf_rows_parallel(t.values, subjects, regions, b);
  EXPECT_EQ(a, b);

  const std::size_t cols = regions * kMeasureCount;
  std::vector<double> mean(cols), sd(cols);
  Rng rng(13);
  for (std::size_t c = 0; c < cols; ++c) {
    mean[c] = rng.normal();
    sd[c] = c % 11 == 0 ? 0.0 : std::abs(rng.normal()) + 0.1;
  }
  std::vector<double> x = t.values, y = t.values;
  kernels::zscore_serial(x, subjects, cols, mean, sd);
  kernels::zscore_parallel(y, subjects, cols, mean, sd);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x[0], 0.0);
}

TEST(FeatureMatrixIo, DescriptorNames) {
  const Atlas a = make_synthetic_atlas(2);
  EXPECT_EQ(descriptor_name(mf_descriptors(4)[5], a), "MF:lh_R1__thickness");
  EXPECT_EQ(descriptor_name(mcf_descriptors(4)[2], a), "MCF:lh_R0__rh_R1");
}

TEST(FeatureMatrixIo, CsvRoundTrip) {
  const Atlas a = make_synthetic_atlas(2);
  const auto t = random_tensor(4, a.size(), 14);
  for (FeatureKind k : {FeatureKind::kMF, FeatureKind::kMCF}) {
    const auto m = build_features(k, t, a);
    const std::string text = feature_matrix_to_csv(m, a);
    EXPECT_EQ(text.substr(0, 7), "SUB_ID,");
    const auto back = feature_matrix_from_csv(text, a);
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.subject_ids, m.subject_ids);
    EXPECT_EQ(back.descriptors, m.descriptors);
    EXPECT_EQ(back.values, m.values);
  }
}

TEST(FeatureMatrixIo, BinaryCacheValidatesAtlasAndKey) {
  morphconn::testing::TempDir dir;
  const Atlas a = make_synthetic_atlas(3);
  const auto m = build_mcf(random_tensor(5, a.size(), 15), a);
  const auto path = dir / "cache" / "m.bin";
  write_feature_cache(path, m, "key1");
  const auto hit = read_feature_cache(path, a, "key1");
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->values, m.values);
  EXPECT_EQ(hit->descriptors, m.descriptors);
  EXPECT_EQ(hit->subject_ids, m.subject_ids);
  EXPECT_FALSE(read_feature_cache(path, a, "key2"));
  EXPECT_FALSE(read_feature_cache(path, make_synthetic_atlas(4), "key1"));
  EXPECT_FALSE(read_feature_cache(dir / "absent.bin", a, "key1"));
}

TEST(FeatureKindTokens, CaseInsensitive) {
  EXPECT_EQ(parse_feature_kind("mcf"), FeatureKind::kMCF);
  EXPECT_EQ(parse_feature_kind("MF"), FeatureKind::kMF);
  EXPECT_FALSE(parse_feature_kind("edges"));
  EXPECT_EQ(parse_fit_scope("full_cohort"), FitScope::kFullCohort);
}
