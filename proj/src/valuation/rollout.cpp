#include <cmath>

#include "guidec/parallel.hpp"
#include "guidec/rng.hpp"
#include "guidec/valuation.hpp"

namespace guidec {

StepPolicy make_step_policy(const ValuationProblem& problem, const PolicySpec& spec,
                            const ValueTables* q_tables) {
  spec.validate();
  if (!problem.lm) throw Error(ErrorCode::InvalidArgument, "valuation problem has no model");
  if (spec.kind == PolicyKind::classifier_guidance && !q_tables) {
    throw Error(ErrorCode::MissingGuidanceInput, "classifier guidance needs value tables");
  }
  const LanguageModel* lm = problem.lm;
  const DecodeLimits limits = problem.limits;
  return [lm, spec, limits, q_tables](const DecodeState& state) {
    if (spec.kind == PolicyKind::classifier_guidance) {
      return step_distribution(*lm, spec, state, limits, q_tables->at(state.generated()).q);
    }
    return step_distribution(*lm, spec, state, limits);
  };
}

RolloutEstimate rollout_estimate(const StepPolicy& policy, const ValuationProblem& problem,
                                 const DecodeState& state, std::size_t n_samples,
                                 std::uint64_t seed) {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const TokenId eos = problem.lm->vocab().eos();
  const auto horizon = static_cast<std::size_t>(problem.limits.horizon);
  std::vector<double> rewards(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    CounterRng rng(seed + i);
    DecodeState s = state;
    while (!s.is_terminal()) {
      if (s.step() >= horizon) {
        throw Error(ErrorCode::InvariantViolation, "rollout policy ran past the horizon");
      }
      s = advance(s, sample_index(policy(s), rng.uniform()));
    }
    rewards[i] = discriminate(problem.rule, s.generated(), eos);
  });
  double total = 0.0;
  for (double r : rewards) total += r;
  const double n = static_cast<double>(n_samples);
  RolloutEstimate out{total / n, 0.0};
  if (n_samples > 1) {
    double ss = 0.0;
    for (double r : rewards) ss += (r - out.mean) * (r - out.mean);
    out.stderr_of_mean = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace guidec
