#pragma once

#include <span>
#include <vector>

#include "guidec/core.hpp"
#include "guidec/policies.hpp"

namespace guidec {

// Algebraic form of the temperature objective.
//   entropy:       -{ (1/T) KL(pi||P) + (1/T - 1) H(pi) }   (same value as -(1/T-1) H(pi,P) - KL(pi||P))
//   cross_entropy: -{ T KL(pi||P) + (1 - T) H(pi,P) }        (the entropy form times T)
enum class TemperatureForm { entropy, cross_entropy };

// Action-state value objective J(pi) as a weighted sum of informational
// terms. Evaluates on any positive vector, so it can be differentiated in the
// ambient space; on the simplex it is the objective each closed form maximizes.
class Objective {
 public:
  enum class TermKind {
    expectation,    // sum pi * g        (approximate mutual information when g is a PMI)
    kl,             // sum pi log(pi/q)
    cross_entropy,  // -sum pi log q
    entropy,        // -sum pi log pi
  };

  struct Term {
    TermKind kind;
    double weight;
    std::vector<double> data;  // g for expectation, q otherwise; unused by entropy
    std::vector<double> log_data;  // log q for kl and cross_entropy
  };

  explicit Objective(std::size_t dimension) : dimension_(dimension) {}

  Objective& add(TermKind kind, double weight, std::vector<double> data = {});

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  double value(std::span<const double> pi) const;
  std::vector<double> gradient(std::span<const double> pi) const;

 private:
  std::size_t dimension_;
  std::vector<Term> terms_;
};

// Table of objectives:
//   classifier_guidance    lambda * E_pi[log Q/V] - KL(pi||P)
//   classifier_free        lambda * E_pi[log P/P-] - KL(pi||P)
//   kl_guided_temperature  -lambda(s,s-) H(pi,P) - KL(pi||P)
//   temperature            per `form`
//   greedy                 -H(pi,P)
Objective make_objective(const PolicySpec& spec, const GuidanceInputs& inputs,
                         TemperatureForm form = TemperatureForm::entropy);

// lambda * KL(pi || pi_stripped) - KL(pi || P), with pi_stripped held fixed.
Objective self_referential_objective(const TokenDist& p_cond, const TokenDist& pi_stripped,
                                     double lambda);

double objective_value(const PolicySpec& spec, const TokenDist& candidate,
                       const GuidanceInputs& inputs,
                       TemperatureForm form = TemperatureForm::entropy);

}  // namespace guidec
