#pragma once

// Independent reference implementations. None of these call into the
// library's numerical code.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace morphconn::oracle {

/// Student t density.
inline double t_density(double x, double df) {
  const double log_norm =
      std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df));
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2;
  const double lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// Two-sided p-value by integrating the density over [0, |t|]. The interval
/// is split into unit pieces so the quadrature never skips the peak.
inline double t_two_sided_p(double t, double df) {
  const double x = std::abs(t);
  const auto f = [df](double u) { return t_density(u, df); };
  double mass = 0.0;
  for (double lo = 0.0; lo < x; lo += 1.0) mass += integrate(f, lo, std::min(lo + 1.0, x), 1e-15);
  return std::max(0.0, 1.0 - 2.0 * mass);
}

/// Exhaustive CART on a tiny instance: every feature and every midpoint is
/// tried, the first strictly better (S_L/n_L + S_R/n_R) wins.
struct CartNode {
  int feature = -1;
  double threshold = 0.0;
  std::array<int, 2> counts{};
  std::unique_ptr<CartNode> left, right;
};

inline std::unique_ptr<CartNode> build_cart(const std::vector<std::vector<double>>& x,
                                            const std::vector<int>& y, const std::vector<int>& rows) {
  auto node = std::make_unique<CartNode>();
  for (int r : rows) ++node->counts[y[r]];
  const long n = static_cast<long>(rows.size());
  if (n < 2 || node->counts[0] == 0 || node->counts[1] == 0) return node;

  // Score of a split is num/den = (S_L*n_R + S_R*n_L) / (n_L*n_R); the parent is S/n.
  long best_num = node->counts[0] * node->counts[0] + node->counts[1] * node->counts[1];
  long best_den = n;
  int best_f = -1;
  double best_t = 0.0;
  const std::size_t p = x.empty() ? 0 : x[0].size();
  for (std::size_t f = 0; f < p; ++f) {
    std::vector<double> vals;
    for (int r : rows) vals.push_back(x[r][f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      double thr = (vals[k] + vals[k + 1]) / 2;
      if (thr >= vals[k + 1]) thr = vals[k];
      long l[2] = {0, 0}, r[2] = {0, 0};
      for (int row : rows) (x[row][f] <= thr ? l : r)[y[row]]++;
      const long nl = l[0] + l[1], nr = r[0] + r[1];
      const long num = (l[0] * l[0] + l[1] * l[1]) * nr + (r[0] * r[0] + r[1] * r[1]) * nl;
      const long den = nl * nr;
      if (num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
        best_f = static_cast<int>(f);
        best_t = thr;
      }
    }
  }
  if (best_f < 0) return node;
  node->feature = best_f;
  node->threshold = best_t;
  std::vector<int> lrows, rrows;
  for (int r : rows) (x[r][best_f] <= best_t ? lrows : rrows).push_back(r);
  node->left = build_cart(x, y, lrows);
  node->right = build_cart(x, y, rrows);
  return node;
}

/// Leaf majority; ties go to the class with more training rows, then class 0.
inline int cart_predict(const CartNode& root, const std::vector<double>& row,
                        const std::array<int, 2>& prior) {
  const CartNode* n = &root;
  while (n->feature >= 0) n = row[n->feature] <= n->threshold ? n->left.get() : n->right.get();
  if (n->counts[0] != n->counts[1]) return n->counts[1] > n->counts[0] ? 1 : 0;
  return prior[1] > prior[0] ? 1 : 0;
}

/// Nearest class centroid (Euclidean) classifier.
inline std::vector<int> nearest_centroid(const std::vector<std::vector<double>>& train,
                                         const std::vector<int>& labels,
                                         const std::vector<std::vector<double>>& test) {
  const std::size_t p = train.at(0).size();
  std::array<std::vector<double>, 2> centroid{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  std::array<double, 2> n{0, 0};
  for (std::size_t i = 0; i < train.size(); ++i) {
    ++n[labels[i]];
    for (std::size_t j = 0; j < p; ++j) centroid[labels[i]][j] += train[i][j];
  }
  for (int c = 0; c < 2; ++c) {
    for (double& v : centroid[c]) v /= n[c];
  }
  std::vector<int> out;
  for (const auto& row : test) {
    double d[2] = {0, 0};
    for (int c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < p; ++j) d[c] += (row[j] - centroid[c][j]) * (row[j] - centroid[c][j]);
    }
    out.push_back(d[1] < d[0] ? 1 : 0);
  }
  return out;
}

}  // namespace morphconn::oracle
