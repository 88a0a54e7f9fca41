#pragma once

#include <span>

namespace morphconn {

/// Two-sample t statistic and degrees of freedom.
struct TStatistic {
  double t = 0.0;
  double df = 0.0;
};

/// Welch's unequal-variance t-test: t = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b),
/// df by Welch-Satterthwaite. Both samples need at least two values.
///
/// When both sample variances are zero the statistic is degenerate: equal
/// means give t = 0, different means give t = +/-DBL_MAX (which maps to the
/// smallest positive p); df is then n_a + n_b - 2. When n_a == n_b and the
/// variances are equal the Welch df is exactly n_a + n_b - 2.
TStatistic welch_t(std::span<const double> a, std::span<const double> b);

/// Pooled-variance Student t-test, df = n_a + n_b - 2.
TStatistic pooled_t(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b). `y` must equal 1 - x; passing it
/// separately avoids cancellation when x is close to 1.
double regularized_incomplete_beta(double a, double b, double x, double y);

/// Two-sided p-value of Student's t distribution:
///   p = I_{df/(df+t^2)}(df/2, 1/2), clamped to [denorm_min, 1].
double t_two_sided_p(double t, double df);

}  // namespace morphconn
