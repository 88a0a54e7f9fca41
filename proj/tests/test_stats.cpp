#include <gtest/gtest.h>

#include <cfloat>
#include <cmath>
#include <limits>
#include <vector>

#include "morphconn/random.hpp"
#include "morphconn/stats.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace morphconn;
using morphconn::testing::expect_error;

namespace {

std::vector<double> sample(Rng& rng, std::size_t n, double mean, double sd) {
  std::vector<double> v(n);
  for (double& x : v) x = mean + sd * rng.normal();
  return v;
}

}  // namespace

TEST(WelchT, HandComputedExample) {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const auto r = welch_t(a, b);
  // (2 - 3) / sqrt(1/3 + 1/3)
  EXPECT_NEAR(r.t, -1.224745, 1e-6);
  EXPECT_NEAR(r.t, -1.0 / std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_EQ(r.df, 4.0);
}

TEST(WelchT, IdenticalSamplesGiveZero) {
  const std::vector<double> a{1.5, 2.5, 7.0, 3.0};
  const auto r = welch_t(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(t_two_sided_p(r.t, r.df), 1.0);
}

TEST(WelchT, ZeroVarianceEqualMeans) {
  const std::vector<double> a{5, 5}, b{5, 5};
  const auto r = welch_t(a, b);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.df, 2.0);
  EXPECT_EQ(t_two_sided_p(r.t, r.df), 1.0);
}

TEST(WelchT, ZeroVarianceDifferentMeans) {
  const std::vector<double> a{5, 5, 5}, b{7, 7};
  const auto r = welch_t(a, b);
  EXPECT_EQ(r.t, -DBL_MAX);
  EXPECT_EQ(r.df, 3.0);
  const double p = t_two_sided_p(r.t, r.df);
  EXPECT_GT(p, 0.0);
  EXPECT_EQ(p, std::numeric_limits<double>::denorm_min());
}

TEST(WelchT, GroupTooSmall) {
  const std::vector<double> a{1}, b{1, 2};
  expect_error<ValidationError>([&] { welch_t(a, b); }, "GroupTooSmall");
  expect_error<ValidationError>([&] { pooled_t(b, a); }, "GroupTooSmall");
}

TEST(WelchT, NonFiniteInput) {
  const std::vector<double> a{1, std::numeric_limits<double>::infinity()}, b{1, 2};
  EXPECT_THROW(welch_t(a, b), ValidationError);
}

TEST(WelchT, MatchesDirectFormulaOnUnequalGroups) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto a = sample(rng, 2 + rng.uniform_index(30), rng.normal(), 0.1 + rng.uniform01() * 3);
    const auto b = sample(rng, 2 + rng.uniform_index(30), rng.normal(), 0.1 + rng.uniform01() * 3);
    auto moments = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m += x;
      m /= v.size();
      double s2 = 0;
      for (double x : v) s2 += (x - m) * (x - m);
      return std::pair{m, s2 / (v.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double qa = va / a.size(), qb = vb / b.size();
    const double t = (ma - mb) / std::sqrt(qa + qb);
    const double df = (qa + qb) * (qa + qb) /
                      (qa * qa / (a.size() - 1) + qb * qb / (b.size() - 1));
    const auto r = welch_t(a, b);
    EXPECT_NEAR(r.t, t, 1e-10 * std::max(1.0, std::abs(t)));
    EXPECT_NEAR(r.df, df, 1e-10 * df);
  }
}

TEST(WelchT, GroupSwapSymmetry) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto a = sample(rng, 2 + rng.uniform_index(20), 0, 1);
    const auto b = sample(rng, 2 + rng.uniform_index(20), 0.5, 2);
    const auto ab = welch_t(a, b);
    const auto ba = welch_t(b, a);
    EXPECT_EQ(ab.t, -ba.t);
    EXPECT_EQ(ab.df, ba.df);
    EXPECT_EQ(t_two_sided_p(ab.t, ab.df), t_two_sided_p(ba.t, ba.df));
  }
}

TEST(WelchT, AffineInvariance) {
  // Values on a 2^-20 grid, c a power of two and k on the grid: the transformed
  // samples are exact, so any drift comes from the statistic itself.
  Rng rng(3);
  auto grid = [](double v) { return std::ldexp(std::round(std::ldexp(v, 20)), -20); };
  for (int i = 0; i < 500; ++i) {
    auto a = sample(rng, 3 + rng.uniform_index(20), 0, 1);
    auto b = sample(rng, 3 + rng.uniform_index(20), 0.02 * rng.normal(), 1.5);
    for (double& x : a) x = grid(x);
    for (double& x : b) x = grid(x);
    const auto before = welch_t(a, b);
    const double c = std::ldexp(1.0, static_cast<int>(rng.uniform_index(9)) - 4);
    const double k = grid(rng.normal() * 1000);
    for (double& x : a) x = c * x + k;
    for (double& x : b) x = c * x + k;
    const auto after = welch_t(a, b);
    const double p0 = t_two_sided_p(before.t, before.df), p1 = t_two_sided_p(after.t, after.df);
    EXPECT_NEAR(after.t, before.t, 1e-12 * std::abs(before.t));
    EXPECT_NEAR(after.df, before.df, 1e-12 * before.df);
    EXPECT_NEAR(p1, p0, 1e-12 * p0);
    const auto pa = pooled_t(a, b);
    for (double& x : a) x = (x - k) / c;
    for (double& x : b) x = (x - k) / c;
    EXPECT_NEAR(pa.t, pooled_t(a, b).t, 1e-12 * std::abs(pa.t));
  }
}

TEST(WelchT, EqualSizeEqualVarianceGivesPooledDf) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.uniform_index(40);
    // Integer data with an integer mean keeps every moment exact, so the two
    // sample variances are bitwise equal.
    std::vector<double> a(n);
    long sum = 0;
    for (double& x : a) {
      x = static_cast<double>(rng.uniform_index(50));
      sum += static_cast<long>(x);
    }
    a.back() += static_cast<double>((static_cast<long>(n) - sum % static_cast<long>(n)) % static_cast<long>(n));
    std::vector<double> b(a.rbegin(), a.rend());
    for (double& x : b) x += 3.0;
    const auto r = welch_t(a, b);
    EXPECT_EQ(r.df, static_cast<double>(2 * n - 2));
  }
}

TEST(PooledT, HandComputedExample) {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4, 5, 6};
  // pooled variance = (2*1 + 4*2.5) / 6 = 2, se = sqrt(2 * (1/3 + 1/5))
  const auto r = pooled_t(a, b);
  EXPECT_NEAR(r.t, (2.0 - 4.0) / std::sqrt(2.0 * (1.0 / 3 + 1.0 / 5)), 1e-14);
  EXPECT_EQ(r.df, 6.0);
}

TEST(IncompleteBeta, ClosedForms) {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
    EXPECT_NEAR(regularized_incomplete_beta(1, 1, x, 1 - x), x, 1e-14);
    EXPECT_NEAR(regularized_incomplete_beta(2.5, 1, x, 1 - x), std::pow(x, 2.5), 1e-14);
    EXPECT_NEAR(regularized_incomplete_beta(1, 3, x, 1 - x), 1 - std::pow(1 - x, 3), 1e-14);
  }
  EXPECT_NEAR(regularized_incomplete_beta(7.5, 7.5, 0.5, 0.5), 0.5, 1e-14);
}

TEST(TwoSidedP, FrozenValues) {
  EXPECT_EQ(t_two_sided_p(0.0, 3.0), 1.0);
  EXPECT_EQ(t_two_sided_p(0.0, 250.0), 1.0);
  EXPECT_NEAR(t_two_sided_p(1.224745, 4), 0.2879, 5e-5);
  EXPECT_NEAR(t_two_sided_p(1.224745, 4), oracle::t_two_sided_p(1.224745, 4), 1e-9);
  EXPECT_NEAR(t_two_sided_p(12.7062, 1), 0.05, 1e-5);
  EXPECT_NEAR(t_two_sided_p(12.7062, 1), oracle::t_two_sided_p(12.7062, 1), 1e-9);
  // df = 1 is the Cauchy distribution: p = 1 - 2 atan(|t|) / pi.
  EXPECT_NEAR(t_two_sided_p(3.0, 1), 1 - 2 * std::atan(3.0) / M_PI, 1e-14);
  // df = 2 has p = 1 - |t| / sqrt(2 + t^2).
  EXPECT_NEAR(t_two_sided_p(1.7, 2), 1 - 1.7 / std::sqrt(2 + 1.7 * 1.7), 1e-14);
}

TEST(TwoSidedP, AgreesWithIntegratedDensity) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double df = 1 + 499 * rng.uniform01();
    const double t = -10 + 20 * rng.uniform01();
    EXPECT_NEAR(t_two_sided_p(t, df), oracle::t_two_sided_p(t, df), 1e-9) << t << " " << df;
  }
}

TEST(TwoSidedP, StrictlyDecreasingInAbsT) {
  for (double df : {1.0, 2.5, 10.0, 120.0}) {
    double prev = t_two_sided_p(0.0, df);
    for (double t = 0.05; t < 8.0; t += 0.05) {
      const double p = t_two_sided_p(t, df);
      EXPECT_LT(p, prev) << t << " " << df;
      EXPECT_EQ(p, t_two_sided_p(-t, df));
      prev = p;
    }
  }
}

TEST(TwoSidedP, RangeAndErrors) {
  EXPECT_GT(t_two_sided_p(1e6, 500), 0.0);
  EXPECT_LE(t_two_sided_p(1e-12, 5), 1.0);
  EXPECT_THROW(t_two_sided_p(std::numeric_limits<double>::quiet_NaN(), 3), ValidationError);
  EXPECT_THROW(t_two_sided_p(1.0, 0.0), Error);
}
