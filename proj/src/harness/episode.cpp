#include "guidec/harness.hpp"
#include "guidec/parallel.hpp"
#include "guidec/rng.hpp"

namespace guidec {

using nlohmann::json;

EpisodeRunner::EpisodeRunner(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  const ValuationProblem problem = scenario_.problem();
  if (scenario_.policy.kind == PolicyKind::classifier_guidance) {
    tables_ = std::make_shared<const ValueTables>(
        backward_induction(problem, rollout_for(scenario_.policy)));
  }
  policy_ = make_step_policy(problem, scenario_.policy, tables_.get());
}

EpisodeTrace EpisodeRunner::run(std::uint64_t seed) const {
  const DecodeLimits& limits = scenario_.limits;
  const TokenId eos = scenario_.model->vocab().eos();
  CounterRng rng(seed);

  EpisodeTrace trace;
  trace.evidence_id = scenario_.evidence_id;
  trace.prompt = scenario_.prompt;
  trace.horizon = limits.horizon;

  DecodeState state(scenario_.evidence_id, scenario_.prompt, eos);
  while (!state.is_terminal()) {
    TokenDist pi = policy_(state);
    const TokenId action = sample_index(pi, rng.uniform());
    trace.steps.push_back(EpisodeStep{state.generated(), action, std::move(pi), 0.0});
    state = advance(state, action);
  }
  trace.terminal_reward = discriminate(scenario_.rule, state.generated(), eos);
  trace.steps.back().reward = trace.terminal_reward;
  trace.validate(eos);
  return trace;
}

std::vector<EpisodeTrace> EpisodeRunner::run_batch(std::uint64_t seed, std::size_t count) const {
  std::vector<EpisodeTrace> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = run(seed + i); });
  return out;
}

EpisodeTrace run_episode(const Scenario& scenario, std::uint64_t seed) {
  return EpisodeRunner(scenario).run(seed);
}

namespace {

json tokens_json(std::span<const TokenId> seq, const Vocab& vocab) {
  json out = json::array();
  for (TokenId t : seq) out.push_back(vocab.token(t));
  return out;
}

}  // namespace

json trace_to_json(const EpisodeTrace& trace, const Vocab& vocab) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"generated", tokens_json(s.generated, vocab)},
                     {"action", vocab.token(s.action)},
                     {"policy", std::vector<double>(s.policy.probs().begin(), s.policy.probs().end())},
                     {"reward", s.reward}});
  }
  return {{"evidence_id", trace.evidence_id ? json(*trace.evidence_id) : json(nullptr)},
          {"prompt", tokens_json(trace.prompt, vocab)},
          {"vocab", vocab.tokens()},
          {"horizon", trace.horizon},
          {"discount", EpisodeTrace::kDiscount},
          {"steps", std::move(steps)},
          {"output", tokens_json(trace.output(), vocab)},
          {"terminal_reward", trace.terminal_reward}};
}

}  // namespace guidec
