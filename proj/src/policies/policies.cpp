#include "guidec/policies.hpp"

#include <cmath>
#include <vector>

#include "guidec/infotheory.hpp"
#include "guidec/kernels.hpp"

namespace guidec {

namespace {

void check_dims(const TokenDist& a, const TokenDist& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "conditional and unconditional sizes differ");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::NegativeLambda, "lambda must be a finite value >= 0");
  }
}

}  // namespace

TokenDist greedy_policy(const TokenDist& p) { return TokenDist::one_hot(p.size(), p.argmax()); }

TokenDist temperature_policy(const TokenDist& p, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::NonPositiveTemperature, "temperature must be positive");
  }
  if (temperature == 1.0) return p;  // exact identity, not a renormalized copy
  std::vector<double> weights(p.size());
  kernels::scale_shift(1.0 / temperature, p.log_probs(), 0.0, weights);
  return log_normalize(weights);
}

DynamicLambda dynamic_lambda(Nats kl, double sigma, HShape h) {
  if (!(kl >= 0.0)) throw Error(ErrorCode::NegativeKL, "KL must be >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
  const double x = kl / sigma;
  double lambda = 0.0;
  switch (h) {
    case HShape::exp2: lambda = std::exp2(x) - 1.0; break;
    case HShape::linear: lambda = x; break;
    case HShape::quadratic: lambda = x * x; break;
  }
  return {lambda, 1.0 / (lambda + 1.0)};
}

TokenDist kl_guided_policy(const TokenDist& p_cond, const TokenDist& p_uncond, double sigma,
                           HShape h) {
  check_dims(p_cond, p_uncond);
  const auto dl = dynamic_lambda(kl_divergence(p_cond, p_uncond), sigma, h);
  return temperature_policy(p_cond, dl.temperature);
}

TokenDist classifier_guidance_policy(const TokenDist& p_cond, std::span<const double> q_over_v,
                                     double lambda) {
  check_lambda(lambda);
  if (q_over_v.size() != p_cond.size()) {
    throw Error(ErrorCode::DimensionMismatch, "q_over_v size differs from the vocabulary");
  }
  std::vector<double> log_ratio(q_over_v.size());
  for (std::size_t i = 0; i < q_over_v.size(); ++i) {
    const double r = q_over_v[i];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::InvalidArgument, "Q/V ratios must be finite and >= 0");
    }
    log_ratio[i] = std::log(r == 0.0 ? kQFloor : r);
  }
  std::vector<double> weights(p_cond.size());
  kernels::affine2(lambda, log_ratio, 1.0, p_cond.log_probs(), weights);
  return log_normalize(weights);
}

TokenDist classifier_free_policy(const TokenDist& p_cond, const TokenDist& p_uncond,
                                 double lambda) {
  check_lambda(lambda);
  check_dims(p_cond, p_uncond);
  std::vector<double> weights(p_cond.size());
  kernels::affine2(1.0 + lambda, p_cond.log_probs(), -lambda, p_uncond.log_probs(), weights);
  return log_normalize(weights);
}

TokenDist apply_policy(const PolicySpec& spec, const GuidanceInputs& inputs) {
  spec.validate();
  switch (spec.kind) {
    case PolicyKind::greedy:
      return greedy_policy(inputs.p_cond);
    case PolicyKind::temperature:
      return temperature_policy(inputs.p_cond, spec.temperature);
    case PolicyKind::kl_guided_temperature:
      if (!inputs.p_uncond) throw Error(ErrorCode::MissingGuidanceInput, "p_uncond required");
      return kl_guided_policy(inputs.p_cond, *inputs.p_uncond, spec.sigma, spec.h);
    case PolicyKind::classifier_guidance:
      if (!inputs.q_over_v) throw Error(ErrorCode::MissingGuidanceInput, "q_over_v required");
      return classifier_guidance_policy(inputs.p_cond, *inputs.q_over_v, spec.lambda);
    case PolicyKind::classifier_free:
      if (!inputs.p_uncond) throw Error(ErrorCode::MissingGuidanceInput, "p_uncond required");
      return classifier_free_policy(inputs.p_cond, *inputs.p_uncond, spec.lambda);
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled policy kind");
}

std::vector<double> q_over_v_ratios(std::span<const double> q, const TokenDist& anchor) {
  if (q.size() != anchor.size()) {
    throw Error(ErrorCode::DimensionMismatch, "Q vector size differs from the anchor");
  }
  const double v = kernels::weighted_sum(anchor.probs(), q);
  std::vector<double> out(q.size(), 1.0);
  if (!(v > 0.0)) return out;
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = (q[i] == 0.0 ? kQFloor : q[i]) / v;
  return out;
}

}  // namespace guidec
