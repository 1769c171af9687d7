#pragma once

// Naive long-double references for the test suites. Nothing here calls into
// the library's numerics.

#include <cmath>
#include <functional>
#include <vector>

#include "guidec/core.hpp"

namespace oracles {

using Vec = std::vector<long double>;

inline Vec normalize(const Vec& w) {
  long double z = 0;
  for (auto x : w) z += x;
  Vec out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / z;
  return out;
}

inline long double entropy(const Vec& p) {
  long double h = 0;
  for (auto x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

inline long double cross_entropy(const Vec& p, const Vec& q) {
  long double h = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) h -= p[i] * std::log(q[i]);
  return h;
}

inline long double kl(const Vec& p, const Vec& q) {
  long double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

inline Vec to_vec(const guidec::TokenDist& d) {
  Vec out;
  for (double p : d.probs()) out.push_back(p);
  return out;
}

inline double linf(const guidec::TokenDist& d, const Vec& ref) {
  double worst = 0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    worst = std::max(worst, static_cast<double>(std::fabs(d.prob(i) - ref[i])));
  return worst;
}

// Probability that a process emitting step_probs(prefix) over `n` symbols
// reaches a terminal sequence accepted by `accept`; every path enumerated.
inline long double enumerate(std::size_t n, guidec::TokenId eos,
                             const std::function<Vec(const guidec::TokenSeq&)>& step_probs,
                             const std::function<bool(const guidec::TokenSeq&)>& accept,
                             guidec::TokenSeq prefix = {}) {
  if (!prefix.empty() && prefix.back() == eos) return accept(prefix) ? 1.0L : 0.0L;
  const Vec p = step_probs(prefix);
  long double total = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (p[a] == 0) continue;
    auto next = prefix;
    next.push_back(static_cast<guidec::TokenId>(a));
    total += p[a] * enumerate(n, eos, step_probs, accept, next);
  }
  return total;
}

}  // namespace oracles
