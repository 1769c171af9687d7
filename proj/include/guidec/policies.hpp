#pragma once

#include <optional>
#include <span>
#include <vector>

#include "guidec/core.hpp"

namespace guidec {

// Floor substituted for Q = 0 inside log(Q/V).
inline constexpr double kQFloor = 1e-9;

struct GuidanceInputs {
  TokenDist p_cond;                           // P_G(.|s_t)
  std::optional<TokenDist> p_uncond;          // P_G(.|s_t-)
  std::optional<std::vector<double>> q_over_v;  // Q(s_t,a) / V(s_t)
};

// One-hot at argmax p, ties to the lowest index.
TokenDist greedy_policy(const TokenDist& p);

// pi ∝ p^(1/T).
TokenDist temperature_policy(const TokenDist& p, double temperature);

struct DynamicLambda {
  double lambda;       // h(kl)
  double temperature;  // 1 / (lambda + 1)
};

// lambda = h(kl). exp2: 2^(kl/sigma) - 1, linear: kl/sigma, quadratic: (kl/sigma)^2.
DynamicLambda dynamic_lambda(Nats kl, double sigma, HShape h = HShape::exp2);

// pi ∝ p_cond^(lambda + 1) with lambda = h(KL(p_cond || p_uncond)), realized
// as a second softmax at temperature 1/(lambda + 1) over P_G.
TokenDist kl_guided_policy(const TokenDist& p_cond, const TokenDist& p_uncond, double sigma,
                           HShape h = HShape::exp2);

// pi ∝ (Q/V)^lambda * p_cond. Ratios of exactly 0 are floored at kQFloor.
TokenDist classifier_guidance_policy(const TokenDist& p_cond, std::span<const double> q_over_v,
                                     double lambda);

// pi ∝ (p_cond / p_uncond)^lambda * p_cond.
TokenDist classifier_free_policy(const TokenDist& p_cond, const TokenDist& p_uncond,
                                 double lambda);

// Dispatches on spec.kind. Throws MissingGuidanceInput when a required field
// of `inputs` is absent.
TokenDist apply_policy(const PolicySpec& spec, const GuidanceInputs& inputs);

// Q/V ratios for the classifier-guidance policy. V is the anchor-weighted
// mean of q; zero entries of q are floored at kQFloor. When V is 0 every
// ratio is 1.
std::vector<double> q_over_v_ratios(std::span<const double> q, const TokenDist& anchor);

}  // namespace guidec
