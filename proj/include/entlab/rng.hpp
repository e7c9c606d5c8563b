#pragma once

#include <complex>
#include <cstdint>

namespace entlab {

/// Counter-based 64-bit generator: output i is the SplitMix64 finalizer applied to
/// seed + (i + 1) * 0x9E3779B97F4A7C15. Any (seed, counter) pair can be evaluated
/// independently, so streams are reproducible across platforms and threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) noexcept;

  std::uint64_t next_u64() noexcept { return mix(seed_, counter_++); }
  /// Uniform in the open interval (0, 1) with 53 random bits.
  double next_unit() noexcept;
  double next_gaussian() noexcept;  ///< Box-Muller, standard normal
  /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> next_complex_gaussian() noexcept;
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace entlab
