#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace morphconn {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives a named sub-seed from a master seed:
///   splitmix64(master ^ fnv1a64(name)).
/// Every randomized stage takes its seed from here so a single number pins a run.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;

/// Derives the seed for stream `index` (e.g. one per tree).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Portable random stream. The standard distributions are implementation
/// defined, so integer and normal draws are implemented here on top of the
/// (fully specified) mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal draw (Box-Muller, one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace morphconn
