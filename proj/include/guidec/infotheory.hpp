#pragma once

#include <span>

#include "guidec/core.hpp"

namespace guidec {

// Softmax in log space: output = w - logsumexp(w), with the max subtracted
// before exponentiation. Throws NonFiniteInput on NaN or infinite weights.
TokenDist log_normalize(std::span<const double> log_weights);

// All outputs in nats. Entropy and KL are clamped to 0 when within 1e-12
// below it; 0 log 0 = 0.
Nats entropy(const TokenDist& p);
Nats cross_entropy(const TokenDist& p, const TokenDist& q);
Nats kl_divergence(const TokenDist& p, const TokenDist& q);

// log P(x|y) - log P(x).
Nats pmi(double log_conditional, double log_marginal);

// Versions over raw (possibly unnormalized) nonnegative vectors, used where
// objectives are differentiated off the simplex.
namespace raw {
double entropy(std::span<const double> p);
double cross_entropy(std::span<const double> p, std::span<const double> q);
double kl_divergence(std::span<const double> p, std::span<const double> q);
double expectation(std::span<const double> p, std::span<const double> values);
}  // namespace raw

}  // namespace guidec
