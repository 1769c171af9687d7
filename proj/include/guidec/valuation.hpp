#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "guidec/core.hpp"
#include "guidec/models.hpp"

namespace guidec {

// Binary terminal reward D over the finished output sequence.
class DiscriminatorRule {
 public:
  enum class Kind { contains_token, contains_any, sequence_in_set };

  static DiscriminatorRule contains_token(TokenId token);
  static DiscriminatorRule contains_any(std::set<TokenId> tokens);
  static DiscriminatorRule sequence_in_set(std::set<TokenSeq> sequences);

  Kind kind() const noexcept { return kind_; }
  const std::set<TokenId>& tokens() const noexcept { return tokens_; }
  const std::set<TokenSeq>& sequences() const noexcept { return sequences_; }

  bool accepts(std::span<const TokenId> sequence) const;

 private:
  DiscriminatorRule(Kind kind, std::set<TokenId> tokens, std::set<TokenSeq> sequences);

  Kind kind_;
  std::set<TokenId> tokens_;
  std::set<TokenSeq> sequences_;
};

std::string_view to_string(DiscriminatorRule::Kind kind) noexcept;

// r_T. Throws NonTerminalSequence unless the sequence ends with eos.
int discriminate(const DiscriminatorRule& rule, std::span<const TokenId> terminal_sequence,
                 TokenId eos);

// One episode family: a model, a reward, fixed evidence and prompt, limits.
struct ValuationProblem {
  const LanguageModel* lm = nullptr;
  DiscriminatorRule rule;
  std::optional<std::string> evidence_id;
  TokenSeq prompt;
  DecodeLimits limits;

  DecodeState root() const;
};

// Full-vocabulary policy at `state` restricted to the actions the limits
// allow. Anchors are restricted and renormalized before the closed form is
// applied. `q` holds Q(state, a) for the allowed actions, in order, and is
// required by classifier guidance only.
TokenDist step_distribution(const LanguageModel& lm, const PolicySpec& spec,
                            const DecodeState& state, const DecodeLimits& limits,
                            std::span<const double> q = {});

// P_G(.|state) restricted to the allowed actions.
TokenDist base_distribution(const LanguageModel& lm, const DecodeState& state,
                            const DecodeLimits& limits);

struct SeqHash {
  std::size_t operator()(const TokenSeq& seq) const noexcept;
};

// Values at one reachable state, keyed in ValueTables by the generated suffix.
struct NodeValues {
  double v = 0.0;
  std::vector<TokenId> actions;  // allowed actions, ascending
  std::vector<double> q;         // Q(s, actions[i])
  TokenDist policy = TokenDist::uniform(1);  // rollout policy at s (full vocabulary)

  double q_of(TokenId action) const;
};

struct ValueTables {
  std::unordered_map<TokenSeq, NodeValues, SeqHash> nodes;
  std::optional<PolicySpec> rollout;  // nullopt: the future follows P_G
  std::string policy_used;
  int horizon = 0;

  const NodeValues& at(const TokenSeq& generated) const;
  double v(const TokenSeq& generated) const { return at(generated).v; }
  double q(const TokenSeq& generated, TokenId action) const { return at(generated).q_of(action); }
  double root_value() const { return v({}); }
};

inline constexpr double kMaxEnumeratedStates = 1e7;

// Exact V and Q by backward induction over the token tree. With no rollout
// spec the future follows P_G; otherwise it follows that policy, computed at
// each state from the already-finished child values (for classifier
// guidance this is the backward fixed point of the guided policy).
// Throws StateSpaceTooLarge when |vocab|^horizon exceeds 1e7.
ValueTables backward_induction(const ValuationProblem& problem,
                               const std::optional<PolicySpec>& rollout = std::nullopt);

// The rollout used by classifier guidance for a given q_mode.
std::optional<PolicySpec> rollout_for(const PolicySpec& spec);

// Independent check: V at every stored state as a sum over all completions of
// path probability times D, each completion enumerated forward from that
// state. Base-rollout path probabilities come from the model; a guided
// rollout's come from the per-state policies stored in the tables.
std::unordered_map<TokenSeq, double, SeqHash> enumerate_values(const ValuationProblem& problem,
                                                               const ValueTables& tables);

// A stateless decision rule for sampling: full-vocabulary distribution at a state.
using StepPolicy = std::function<TokenDist(const DecodeState&)>;

// The scenario's decoding policy, backed by precomputed tables when it needs Q.
StepPolicy make_step_policy(const ValuationProblem& problem, const PolicySpec& spec,
                            const ValueTables* q_tables);

struct RolloutEstimate {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

// Monte Carlo V_pi(state). Rollout i uses seed + i, so the estimate does not
// depend on how rollouts are scheduled.
RolloutEstimate rollout_estimate(const StepPolicy& policy, const ValuationProblem& problem,
                                 const DecodeState& state, std::size_t n_samples,
                                 std::uint64_t seed);

}  // namespace guidec
