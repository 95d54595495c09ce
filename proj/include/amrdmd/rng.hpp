#pragma once

#include <cstdint>
#include <vector>

namespace amrdmd {

// Counter-based generator: draw k is splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15).
// No hidden state beyond the counter, so streams are reproducible on every
// platform with IEEE doubles.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  // Uniform on (0, 1]: ((bits >> 11) + 1) * 2^-53.
  double next_uniform();

  // Box-Muller. Variates come in pairs from (u1, u2): the cosine branch is
  // returned first, the sine branch is cached and returned next.
  double next_gaussian();

  std::vector<double> gaussian_vector(std::size_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace amrdmd
