#include "morphconn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "morphconn/error.hpp"

namespace morphconn {

namespace {

struct Moments {
  double n = 0.0;
  double mean = 0.0;  // of x - ref
  double var = 0.0;   // sample variance, n - 1 denominator
};

// Moments of x - ref; both groups share ref.
Moments moments(std::span<const double> x, double ref) {
  Moments m;
  m.n = static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += v - ref;
  m.mean = s / m.n;
  double ss = 0.0;
  for (double v : x) ss += (v - ref - m.mean) * (v - ref - m.mean);
  m.var = ss / (m.n - 1.0);
  return m;
}

void check_samples(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("GroupTooSmall", "t-test needs at least 2 values per group");
  }
  for (auto x : {a, b}) {
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
      throw ValidationError("NonFiniteValue", "t-test input contains NaN or infinity");
    }
  }
}

TStatistic degenerate(const Moments& ma, const Moments& mb) {
  TStatistic r;
  r.df = ma.n + mb.n - 2.0;
  if (ma.mean == mb.mean) {
    r.t = 0.0;
  } else {
    r.t = ma.mean > mb.mean ? std::numeric_limits<double>::max()
                            : -std::numeric_limits<double>::max();
  }
  return r;
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw RuntimeFailure("NoConvergence", "incomplete beta continued fraction did not converge");
}

}  // namespace

TStatistic welch_t(std::span<const double> a, std::span<const double> b) {
  check_samples(a, b);
  const double ref = std::min(a[0], b[0]);
  const Moments ma = moments(a, ref);
  const Moments mb = moments(b, ref);
  if (ma.var == 0.0 && mb.var == 0.0) return degenerate(ma, mb);

  const double sa = ma.var / ma.n;
  const double sb = mb.var / mb.n;
  TStatistic r;
  r.t = (ma.mean - mb.mean) / std::sqrt(sa + sb);
  if (ma.n == mb.n && ma.var == mb.var) {
    r.df = ma.n + mb.n - 2.0;
  } else {
    r.df = (sa + sb) * (sa + sb) / (sa * sa / (ma.n - 1.0) + sb * sb / (mb.n - 1.0));
  }
  return r;
}

TStatistic pooled_t(std::span<const double> a, std::span<const double> b) {
  check_samples(a, b);
  const double ref = std::min(a[0], b[0]);
  const Moments ma = moments(a, ref);
  const Moments mb = moments(b, ref);
  if (ma.var == 0.0 && mb.var == 0.0) return degenerate(ma, mb);
  const double df = ma.n + mb.n - 2.0;
  const double sp2 = ((ma.n - 1.0) * ma.var + (mb.n - 1.0) * mb.var) / df;
  TStatistic r;
  r.t = (ma.mean - mb.mean) / std::sqrt(sp2 * (1.0 / ma.n + 1.0 / mb.n));
  r.df = df;
  return r;
}

double regularized_incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0) || !(y >= 0.0)) {
    throw ValidationError("DomainError", "incomplete beta arguments out of range");
  }
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t) || !std::isfinite(df) || !(df > 0.0)) {
    throw ValidationError("NonFiniteValue", "t-test p-value needs finite t and df > 0");
  }
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  // x = df/(df+t^2), y = 1-x = t^2/(df+t^2); both forms avoid overflow for huge |t|.
  const double x = df / (df + t2);
  const double y = 1.0 / (1.0 + df / t2);
  const double p = regularized_incomplete_beta(0.5 * df, 0.5, x, y);
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0);
}

}  // namespace morphconn
