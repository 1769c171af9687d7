#include "guidec/objectives.hpp"

#include <cmath>

#include "guidec/infotheory.hpp"
#include "guidec/kernels.hpp"

namespace guidec {

namespace {

std::vector<double> logs_of(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::log(x[i]);
  return out;
}

std::vector<double> to_vector(std::span<const double> x) { return {x.begin(), x.end()}; }

const TokenDist& need_uncond(const GuidanceInputs& inputs) {
  if (!inputs.p_uncond) throw Error(ErrorCode::MissingGuidanceInput, "p_uncond required");
  if (inputs.p_uncond->size() != inputs.p_cond.size()) {
    throw Error(ErrorCode::DimensionMismatch, "conditional and unconditional sizes differ");
  }
  return *inputs.p_uncond;
}

}  // namespace

Objective& Objective::add(TermKind kind, double weight, std::vector<double> data) {
  if (kind != TermKind::entropy && data.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "objective term has the wrong dimension");
  }
  Term term{kind, weight, std::move(data), {}};
  if (kind == TermKind::kl || kind == TermKind::cross_entropy) term.log_data = logs_of(term.data);
  terms_.push_back(std::move(term));
  return *this;
}

double Objective::value(std::span<const double> pi) const {
  if (pi.size() != dimension_) throw Error(ErrorCode::DimensionMismatch, "objective input size");
  const auto log_pi = logs_of(pi);
  double total = 0.0;
  for (const auto& t : terms_) {
    double v = 0.0;
    switch (t.kind) {
      case TermKind::expectation: v = kernels::weighted_sum(pi, t.data); break;
      case TermKind::kl: v = kernels::weighted_diff_sum(pi, log_pi, t.log_data); break;
      case TermKind::cross_entropy: v = -kernels::weighted_sum(pi, t.log_data); break;
      case TermKind::entropy: v = -kernels::weighted_sum(pi, log_pi); break;
    }
    total += t.weight * v;
  }
  return total;
}

std::vector<double> Objective::gradient(std::span<const double> pi) const {
  if (pi.size() != dimension_) throw Error(ErrorCode::DimensionMismatch, "objective input size");
  std::vector<double> grad(dimension_, 0.0);
  for (const auto& t : terms_) {
    for (std::size_t i = 0; i < dimension_; ++i) {
      double g = 0.0;
      switch (t.kind) {
        case TermKind::expectation: g = t.data[i]; break;
        case TermKind::kl: g = std::log(pi[i]) - t.log_data[i] + 1.0; break;
        case TermKind::cross_entropy: g = -t.log_data[i]; break;
        case TermKind::entropy: g = -std::log(pi[i]) - 1.0; break;
      }
      grad[i] += t.weight * g;
    }
  }
  return grad;
}

Objective make_objective(const PolicySpec& spec, const GuidanceInputs& inputs,
                         TemperatureForm form) {
  spec.validate();
  using K = Objective::TermKind;
  const TokenDist& p = inputs.p_cond;
  const auto anchor = to_vector(p.probs());
  Objective j(p.size());
  switch (spec.kind) {
    case PolicyKind::greedy:
      j.add(K::cross_entropy, -1.0, anchor);
      break;
    case PolicyKind::temperature: {
      const double t = spec.temperature;
      if (form == TemperatureForm::entropy) {
        j.add(K::kl, -1.0 / t, anchor).add(K::entropy, -(1.0 / t - 1.0));
      } else {
        j.add(K::kl, -t, anchor).add(K::cross_entropy, -(1.0 - t), anchor);
      }
      break;
    }
    case PolicyKind::kl_guided_temperature: {
      const auto& uncond = need_uncond(inputs);
      const double lambda = dynamic_lambda(kl_divergence(p, uncond), spec.sigma, spec.h).lambda;
      j.add(K::cross_entropy, -lambda, anchor).add(K::kl, -1.0, anchor);
      break;
    }
    case PolicyKind::classifier_guidance: {
      if (!inputs.q_over_v) throw Error(ErrorCode::MissingGuidanceInput, "q_over_v required");
      const auto& r = *inputs.q_over_v;
      if (r.size() != p.size()) throw Error(ErrorCode::DimensionMismatch, "q_over_v size");
      std::vector<double> g(r.size());
      for (std::size_t i = 0; i < r.size(); ++i) g[i] = std::log(r[i] == 0.0 ? kQFloor : r[i]);
      j.add(K::expectation, spec.lambda, std::move(g)).add(K::kl, -1.0, anchor);
      break;
    }
    case PolicyKind::classifier_free: {
      const auto& uncond = need_uncond(inputs);
      std::vector<double> g(p.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = pmi(p.log_prob(i), uncond.log_prob(i));
      }
      j.add(K::expectation, spec.lambda, std::move(g)).add(K::kl, -1.0, anchor);
      break;
    }
  }
  return j;
}

Objective self_referential_objective(const TokenDist& p_cond, const TokenDist& pi_stripped,
                                     double lambda) {
  if (p_cond.size() != pi_stripped.size()) {
    throw Error(ErrorCode::DimensionMismatch, "conditional and stripped sizes differ");
  }
  using K = Objective::TermKind;
  Objective j(p_cond.size());
  j.add(K::kl, lambda, to_vector(pi_stripped.probs()))
      .add(K::kl, -1.0, to_vector(p_cond.probs()));
  return j;
}

double objective_value(const PolicySpec& spec, const TokenDist& candidate,
                       const GuidanceInputs& inputs, TemperatureForm form) {
  return make_objective(spec, inputs, form).value(candidate.probs());
}

}  // namespace guidec
