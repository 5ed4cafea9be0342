#pragma once

#include <cstdint>

namespace regulus {

/// Counter-based 64-bit generator: draw i is the splitmix64 finalizer
/// applied to seed + (i+1) * 0x9E3779B97F4A7C15. Streams depend only on
/// (seed, counter), so output is bit-identical across platforms for a fixed
/// seed. Normal variates use the inverse CDF (Acklam's rational
/// approximation with one Halley refinement) rather than any
/// algorithm-dependent rejection scheme.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double next_uniform();  // [0, 1)
  double next_normal();   // standard normal
  double next_laplace();  // unit-scale Laplace
  std::uint64_t next_below(std::uint64_t n);  // uniform in [0, n)

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Inverse standard-normal CDF, accurate to ~1e-15 after refinement.
double normal_quantile(double p);

}  // namespace regulus
