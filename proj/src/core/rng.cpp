#include "guidec/rng.hpp"

namespace guidec {

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

std::uint64_t CounterRng::next() noexcept {
  return mix64(key_ ^ mix64(counter_++));
}

double CounterRng::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

CounterRng CounterRng::split(std::uint64_t stream) const noexcept {
  CounterRng child(0);
  child.key_ = mix64(key_ + mix64(stream ^ 0x5851f42d4c957f2dULL));
  return child;
}

TokenId sample_index(const TokenDist& dist, double u) {
  const auto p = dist.probs();
  double cumulative = 0.0;
  std::size_t last_positive = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = i;
    cumulative += p[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  if (last_positive == p.size()) {
    throw Error(ErrorCode::InvariantViolation, "distribution has no mass");
  }
  // u landed in the rounding gap above the accumulated total.
  return static_cast<TokenId>(last_positive);
}

}  // namespace guidec
