#pragma once

#include <cstdint>

#include "guidec/core.hpp"

namespace guidec {

// Counter-based generator: the n-th draw is a pure function of (key, n), so
// streams derived with split() are reproducible regardless of scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  CounterRng split(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

// Inverse CDF over vocabulary order; zero-mass entries are never returned.
TokenId sample_index(const TokenDist& dist, double u);

}  // namespace guidec
