#include "guidec/infotheory.hpp"

#include <cmath>
#include <vector>

#include "guidec/kernels.hpp"

namespace guidec {

namespace {

constexpr double kClampSlack = 1e-12;

double clamp_nonnegative(double v) { return (v < 0.0 && v >= -kClampSlack) ? 0.0 : v; }

void check_dims(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                "distributions of size " + std::to_string(a) + " and " + std::to_string(b));
  }
}

std::vector<double> logs_of(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
  return out;
}

}  // namespace

TokenDist log_normalize(std::span<const double> log_weights) {
  if (log_weights.empty()) throw Error(ErrorCode::InvalidArgument, "no log-weights");
  for (double w : log_weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteInput, "log-weight is not finite");
  }
  const double m = kernels::max(log_weights);
  std::vector<double> shifted(log_weights.size());
  kernels::scale_shift(1.0, log_weights, -m, shifted);
  std::vector<double> expd(shifted.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) expd[i] = std::exp(shifted[i]);
  const double log_z = std::log(kernels::sum(expd));
  std::vector<double> out(shifted.size());
  kernels::scale_shift(1.0, shifted, -log_z, out);
  return TokenDist::from_log_probs(std::move(out));
}

Nats entropy(const TokenDist& p) {
  return clamp_nonnegative(-kernels::weighted_sum(p.probs(), p.log_probs()));
}

Nats cross_entropy(const TokenDist& p, const TokenDist& q) {
  check_dims(p.size(), q.size());
  return -kernels::weighted_sum(p.probs(), q.log_probs());
}

Nats kl_divergence(const TokenDist& p, const TokenDist& q) {
  check_dims(p.size(), q.size());
  return clamp_nonnegative(kernels::weighted_diff_sum(p.probs(), p.log_probs(), q.log_probs()));
}

Nats pmi(double log_conditional, double log_marginal) {
  if (!std::isfinite(log_conditional) || !std::isfinite(log_marginal)) {
    throw Error(ErrorCode::NonFiniteInput, "pmi needs finite log-probabilities");
  }
  return log_conditional - log_marginal;
}

namespace raw {

double entropy(std::span<const double> p) {
  const auto logs = logs_of(p);
  return -kernels::weighted_sum(p, logs);
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  check_dims(p.size(), q.size());
  const auto logs = logs_of(q);
  return -kernels::weighted_sum(p, logs);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  check_dims(p.size(), q.size());
  const auto lp = logs_of(p);
  const auto lq = logs_of(q);
  return kernels::weighted_diff_sum(p, lp, lq);
}

double expectation(std::span<const double> p, std::span<const double> values) {
  check_dims(p.size(), values.size());
  return kernels::weighted_sum(p, values);
}

}  // namespace raw

}  // namespace guidec
