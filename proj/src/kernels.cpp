#include "morphconn/kernels.hpp"

#include <cmath>

#include "morphconn/ingest.hpp"

namespace morphconn::kernels {

namespace {

inline double profile_distance(const double* a, const double* b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kMeasureCount; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline void mcf_row(const double* profiles, std::size_t regions, double* out) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < regions; ++i) {
    const double* a = profiles + i * kMeasureCount;
    for (std::size_t j = i + 1; j < regions; ++j) {
      out[c++] = profile_distance(a, profiles + j * kMeasureCount);
    }
  }
}

inline double zscore_one(double x, double mean, double sd) {
  return sd > 0.0 ? (x - mean) / sd : 0.0;
}

}  // namespace

void mcf_rows_serial(std::span<const double> profiles, std::size_t subjects, std::size_t regions,
                     std::span<double> out) {
  const std::size_t pairs = regions * (regions - (regions > 0 ? 1 : 0)) / 2;
  for (std::size_t s = 0; s < subjects; ++s) {
    mcf_row(profiles.data() + s * regions * kMeasureCount, regions, out.data() + s * pairs);
  }
}

void mcf_rows_parallel(std::span<const double> profiles, std::size_t subjects,
                       std::size_t regions, std::span<double> out) {
  const std::size_t pairs = regions * (regions - (regions > 0 ? 1 : 0)) / 2;
  const long n = static_cast<long>(subjects);
#pragma omp parallel for schedule(static)
  for (long s = 0; s < n; ++s) {
    const auto su = static_cast<std::size_t>(s);
    mcf_row(profiles.data() + su * regions * kMeasureCount, regions, out.data() + su * pairs);
  }
}

void zscore_serial(std::span<double> values, std::size_t rows, std::size_t cols,
                   std::span<const double> mean, std::span<const double> sd) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = values.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] = zscore_one(row[c], mean[c], sd[c]);
  }
}

void zscore_parallel(std::span<double> values, std::size_t rows, std::size_t cols,
                     std::span<const double> mean, std::span<const double> sd) {
  const long n = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < n; ++r) {
    double* row = values.data() + static_cast<std::size_t>(r) * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] = zscore_one(row[c], mean[c], sd[c]);
  }
}

}  // namespace morphconn::kernels
