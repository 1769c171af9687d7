#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "guidec/errors.hpp"

namespace guidec {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Natural-log units throughout.
using Nats = double;

inline constexpr std::size_t kMaxVocab = 64;

// Ordered, duplicate-free symbol table. Token ids are positions.
class Vocab {
 public:
  Vocab(std::vector<std::string> tokens, std::string_view eos);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId eos() const noexcept { return eos_; }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const;
  // Throws InvalidArgument for unknown symbols.
  TokenId id(std::string_view token) const;
  TokenSeq encode(std::span<const std::string> symbols) const;

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && eos_ == other.eos_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
};

// Probability vector over the vocabulary, held in log space with a cached
// probability view. Entries are finite or -inf (zero mass); exp of the
// entries sums to 1 within 1e-9.
class TokenDist {
 public:
  static TokenDist from_log_probs(std::vector<double> log_probs);
  static TokenDist from_probs(std::vector<double> probs);
  static TokenDist uniform(std::size_t n);
  static TokenDist one_hot(std::size_t n, std::size_t index);

  std::size_t size() const noexcept { return log_probs_.size(); }
  std::span<const double> log_probs() const noexcept { return log_probs_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double prob(std::size_t i) const { return probs_.at(i); }
  double log_prob(std::size_t i) const { return log_probs_.at(i); }

  bool has_full_support() const noexcept;
  // Lowest index among the maxima.
  std::size_t argmax() const noexcept;

  bool operator==(const TokenDist& other) const { return log_probs_ == other.log_probs_; }

 private:
  TokenDist(std::vector<double> log_probs, std::vector<double> probs);

  std::vector<double> log_probs_;
  std::vector<double> probs_;
};

double linf_distance(const TokenDist& a, const TokenDist& b);

// s_t = {e, x, y_<t}. Evidence is an opaque id resolved by the model.
class DecodeState {
 public:
  DecodeState(std::optional<std::string> evidence_id, TokenSeq prompt, TokenId eos,
              TokenSeq generated = {});

  const std::optional<std::string>& evidence_id() const noexcept { return evidence_id_; }
  const TokenSeq& prompt() const noexcept { return prompt_; }
  const TokenSeq& generated() const noexcept { return generated_; }
  TokenId eos() const noexcept { return eos_; }
  std::size_t step() const noexcept { return generated_.size(); }
  bool is_terminal() const noexcept { return !generated_.empty() && generated_.back() == eos_; }

  bool operator==(const DecodeState& other) const = default;

 private:
  std::optional<std::string> evidence_id_;
  TokenSeq prompt_;
  TokenSeq generated_;
  TokenId eos_;
};

// The s- view: same prompt and output, no evidence.
DecodeState strip_evidence(const DecodeState& state);

// Identity transition s' = s ∪ a. Throws AdvancePastTerminal on a finished state.
DecodeState advance(const DecodeState& state, TokenId action);

// Which actions the engine admits at a given step. eos is forced at step
// horizon - 1 and suppressed while fewer than min_length tokens exist.
struct DecodeLimits {
  int horizon = 1;
  int min_length = 0;

  void validate() const;
};

std::vector<TokenId> allowed_actions(const DecodeLimits& limits, std::size_t vocab_size,
                                     TokenId eos, std::size_t step);

struct EpisodeStep {
  TokenSeq generated;  // y_<t when the action was chosen
  TokenId action = 0;
  TokenDist policy = TokenDist::uniform(1);
  double reward = 0.0;
};

struct EpisodeTrace {
  static constexpr double kDiscount = 1.0;

  std::optional<std::string> evidence_id;
  TokenSeq prompt;
  std::vector<EpisodeStep> steps;
  int terminal_reward = 0;
  int horizon = 0;

  TokenSeq output() const;
  double total_reward() const;
  // Checks the reward structure and termination; throws InvariantViolation.
  void validate(TokenId eos) const;
};

enum class PolicyKind { greedy, temperature, kl_guided_temperature, classifier_guidance, classifier_free };
enum class HShape { exp2, linear, quadratic };
enum class QMode { base_rollout, optimal_backward };

std::string_view to_string(PolicyKind kind) noexcept;
std::string_view to_string(HShape shape) noexcept;
std::string_view to_string(QMode mode) noexcept;
PolicyKind parse_policy_kind(std::string_view name);
HShape parse_h_shape(std::string_view name);
QMode parse_q_mode(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::temperature;
  double lambda = 1.0;       // classifier_guidance, classifier_free
  double temperature = 1.0;  // temperature
  double sigma = 1.0;        // kl_guided_temperature
  HShape h = HShape::exp2;   // kl_guided_temperature
  QMode q_mode = QMode::base_rollout;  // classifier_guidance

  static PolicySpec greedy() { return {PolicyKind::greedy}; }
  static PolicySpec with_temperature(double t);
  static PolicySpec kl_guided(double sigma, HShape h = HShape::exp2);
  static PolicySpec classifier_guidance(double lambda, QMode mode = QMode::base_rollout);
  static PolicySpec classifier_free(double lambda);

  // Checks only the hyperparameters relevant to `kind`.
  void validate() const;
};

}  // namespace guidec
