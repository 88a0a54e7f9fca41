#pragma once

#include <cstddef>
#include <span>

namespace morphconn {

/// Execution policy for the data-parallel kernels. Serial variants are the
/// reference implementations; parallel variants must produce bitwise
/// identical output.
enum class Execution { kSerial, kParallel };

namespace kernels {

/// profiles: N x R x 4 (row-major). out: N x R(R-1)/2, pairs (i<j) in
/// lexicographic order.
void mcf_rows_serial(std::span<const double> profiles, std::size_t subjects, std::size_t regions,
                     std::span<double> out);
void mcf_rows_parallel(std::span<const double> profiles, std::size_t subjects,
                       std::size_t regions, std::span<double> out);

inline void mcf_rows(Execution ex, std::span<const double> profiles, std::size_t subjects,
                     std::size_t regions, std::span<double> out) {
  if (ex == Execution::kParallel) {
    mcf_rows_parallel(profiles, subjects, regions, out);
  } else {
    mcf_rows_serial(profiles, subjects, regions, out);
  }
}

/// Per-column z-score: values is N x C row-major, updated in place.
/// sd == 0 columns become 0.
void zscore_serial(std::span<double> values, std::size_t rows, std::size_t cols,
                   std::span<const double> mean, std::span<const double> sd);
void zscore_parallel(std::span<double> values, std::size_t rows, std::size_t cols,
                     std::span<const double> mean, std::span<const double> sd);

}  // namespace kernels
}  // namespace morphconn
