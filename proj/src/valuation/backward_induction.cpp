#include <cmath>
#include <limits>
#include <sstream>

#include "guidec/infotheory.hpp"
#include "guidec/kernels.hpp"
#include "guidec/policies.hpp"
#include "guidec/valuation.hpp"

namespace guidec {

namespace {

constexpr double kBellmanTolerance = 1e-9;

std::vector<TokenId> actions_at(const LanguageModel& lm, const DecodeState& state,
                                const DecodeLimits& limits) {
  if (state.is_terminal()) {
    throw Error(ErrorCode::AdvancePastTerminal, "no actions at a terminal state");
  }
  if (state.step() >= static_cast<std::size_t>(limits.horizon)) {
    throw Error(ErrorCode::InvariantViolation, "state is past the horizon");
  }
  return allowed_actions(limits, lm.vocab().size(), lm.vocab().eos(), state.step());
}

// Restriction of a full-support distribution to `allowed`, renormalized.
TokenDist restrict_to(const TokenDist& full, const std::vector<TokenId>& allowed) {
  if (allowed.size() == full.size()) return full;
  std::vector<double> logs;
  logs.reserve(allowed.size());
  for (TokenId a : allowed) logs.push_back(full.log_prob(a));
  return log_normalize(logs);
}

TokenDist expand(const TokenDist& sub, const std::vector<TokenId>& allowed, std::size_t n) {
  if (allowed.size() == n) return sub;
  std::vector<double> logs(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < allowed.size(); ++i) logs[allowed[i]] = sub.log_prob(i);
  return TokenDist::from_log_probs(std::move(logs));
}

bool needs_uncond(PolicyKind kind) {
  return kind == PolicyKind::kl_guided_temperature || kind == PolicyKind::classifier_free;
}

std::string describe(const std::optional<PolicySpec>& rollout) {
  if (!rollout) return "base";
  std::ostringstream out;
  out << to_string(rollout->kind);
  switch (rollout->kind) {
    case PolicyKind::greedy: break;
    case PolicyKind::temperature: out << " temperature=" << rollout->temperature; break;
    case PolicyKind::kl_guided_temperature:
      out << " sigma=" << rollout->sigma << " h=" << to_string(rollout->h);
      break;
    case PolicyKind::classifier_guidance:
    case PolicyKind::classifier_free: out << " lambda=" << rollout->lambda; break;
  }
  return out.str();
}

class Solver {
 public:
  Solver(const ValuationProblem& problem, const std::optional<PolicySpec>& rollout,
         ValueTables& tables)
      : problem_(problem), lm_(*problem.lm), rollout_(rollout), tables_(tables) {}

  double solve(const DecodeState& state) {
    const auto actions = actions_at(lm_, state, problem_.limits);
    std::vector<double> q(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const DecodeState child = advance(state, actions[i]);
      q[i] = child.is_terminal()
                 ? static_cast<double>(discriminate(problem_.rule, child.generated(), lm_.vocab().eos()))
                 : solve(child);
    }
    TokenDist rho = rollout_ ? step_distribution(lm_, *rollout_, state, problem_.limits, q)
                             : base_distribution(lm_, state, problem_.limits);
    std::vector<double> weights(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) weights[i] = rho.prob(actions[i]);
    const double v = kernels::weighted_sum(weights, q);

    double check = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) check += weights[i] * q[i];
    if (std::abs(check - v) > kBellmanTolerance || v < -kBellmanTolerance ||
        v > 1.0 + kBellmanTolerance) {
      throw Error(ErrorCode::InvariantViolation, "Bellman consistency failed");
    }
    tables_.nodes.insert_or_assign(state.generated(),
                                   NodeValues{v, actions, std::move(q), std::move(rho)});
    return v;
  }

 private:
  const ValuationProblem& problem_;
  const LanguageModel& lm_;
  const std::optional<PolicySpec>& rollout_;
  ValueTables& tables_;
};

}  // namespace

DecodeState ValuationProblem::root() const {
  if (!lm) throw Error(ErrorCode::InvalidArgument, "valuation problem has no model");
  return DecodeState(evidence_id, prompt, lm->vocab().eos());
}

TokenDist base_distribution(const LanguageModel& lm, const DecodeState& state,
                            const DecodeLimits& limits) {
  const auto actions = actions_at(lm, state, limits);
  return expand(restrict_to(lm.next_dist(state), actions), actions, lm.vocab().size());
}

TokenDist step_distribution(const LanguageModel& lm, const PolicySpec& spec,
                            const DecodeState& state, const DecodeLimits& limits,
                            std::span<const double> q) {
  const auto actions = actions_at(lm, state, limits);
  const std::size_t n = lm.vocab().size();
  if (actions.size() == 1) return TokenDist::one_hot(n, actions.front());

  GuidanceInputs inputs{restrict_to(lm.next_dist(state), actions), std::nullopt, std::nullopt};
  if (needs_uncond(spec.kind)) {
    inputs.p_uncond = restrict_to(lm.next_dist(strip_evidence(state)), actions);
  }
  if (spec.kind == PolicyKind::classifier_guidance) {
    if (q.size() != actions.size()) {
      throw Error(ErrorCode::MissingGuidanceInput,
                  "classifier guidance needs Q for every allowed action");
    }
    inputs.q_over_v = q_over_v_ratios(q, inputs.p_cond);
  }
  return expand(apply_policy(spec, inputs), actions, n);
}

std::size_t SeqHash::operator()(const TokenSeq& seq) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (TokenId t : seq) {
    h ^= static_cast<std::size_t>(t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

double NodeValues::q_of(TokenId action) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] == action) return q[i];
  }
  throw Error(ErrorCode::InvalidArgument, "action not allowed at this state");
}

const NodeValues& ValueTables::at(const TokenSeq& generated) const {
  auto it = nodes.find(generated);
  if (it == nodes.end()) throw Error(ErrorCode::InvalidArgument, "state not in value tables");
  return it->second;
}

ValueTables backward_induction(const ValuationProblem& problem,
                               const std::optional<PolicySpec>& rollout) {
  if (!problem.lm) throw Error(ErrorCode::InvalidArgument, "valuation problem has no model");
  problem.limits.validate();
  if (rollout) rollout->validate();
  const auto& vocab = problem.lm->vocab();
  for (TokenId t : problem.prompt) {
    if (t >= vocab.size() || t == vocab.eos()) {
      throw Error(ErrorCode::InvalidArgument, "prompt token outside vocabulary or eos");
    }
  }
  const double states = std::pow(static_cast<double>(vocab.size()), problem.limits.horizon);
  if (states > kMaxEnumeratedStates) {
    throw Error(ErrorCode::StateSpaceTooLarge,
                "|vocab|^horizon = " + std::to_string(states) + " exceeds 1e7");
  }
  ValueTables tables;
  tables.rollout = rollout;
  tables.policy_used = describe(rollout);
  tables.horizon = problem.limits.horizon;
  Solver(problem, tables.rollout, tables).solve(problem.root());
  return tables;
}

std::optional<PolicySpec> rollout_for(const PolicySpec& spec) {
  if (spec.kind == PolicyKind::classifier_guidance && spec.q_mode == QMode::optimal_backward) {
    return spec;
  }
  return std::nullopt;
}

std::unordered_map<TokenSeq, double, SeqHash> enumerate_values(const ValuationProblem& problem,
                                                               const ValueTables& tables) {
  const LanguageModel& lm = *problem.lm;
  const TokenId eos = lm.vocab().eos();
  const DecodeState root = problem.root();
  std::unordered_map<TokenSeq, double, SeqHash> out;

  struct Pending {
    TokenSeq generated;
    double prob;
  };
  for (const auto& [start, node] : tables.nodes) {
    double total = 0.0;
    std::vector<Pending> stack{{start, 1.0}};
    while (!stack.empty()) {
      Pending cur = std::move(stack.back());
      stack.pop_back();
      if (!cur.generated.empty() && cur.generated.back() == eos) {
        total += cur.prob * static_cast<double>(problem.rule.accepts(cur.generated));
        continue;
      }
      const DecodeState state(root.evidence_id(), root.prompt(), eos, cur.generated);
      const TokenDist rho = tables.rollout ? tables.at(cur.generated).policy
                                           : base_distribution(lm, state, problem.limits);
      for (TokenId a = 0; a < rho.size(); ++a) {
        if (rho.prob(a) <= 0.0) continue;
        TokenSeq next = cur.generated;
        next.push_back(a);
        stack.push_back({std::move(next), cur.prob * rho.prob(a)});
      }
    }
    out.emplace(start, total);
  }
  return out;
}

}  // namespace guidec
