#include "guidec/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>


namespace guidec {

namespace {

constexpr double kNormTolerance = 1e-9;

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AdvancePastTerminal: return "AdvancePastTerminal";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::SequenceMissingEos: return "SequenceMissingEos";
    case ErrorCode::UnknownEvidenceId: return "UnknownEvidenceId";
    case ErrorCode::MalformedModelFile: return "MalformedModelFile";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::NonTerminalSequence: return "NonTerminalSequence";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::NegativeKL: return "NegativeKL";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::MissingGuidanceInput: return "MissingGuidanceInput";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::PointTooCloseToBoundary: return "PointTooCloseToBoundary";
    case ErrorCode::EmptyTraceSet: return "EmptyTraceSet";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

// ---- Vocab ------------------------------------------------------------------

Vocab::Vocab(std::vector<std::string> tokens, std::string_view eos) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_.size() > kMaxVocab) {
    throw Error(ErrorCode::InvalidArgument,
                "vocabulary size must be in [2, 64], got " + std::to_string(tokens_.size()));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error(ErrorCode::InvalidArgument, "empty token");
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate token '" + tokens_[i] + "'");
    }
  }
  auto it = index_.find(std::string(eos));
  if (it == index_.end()) {
    throw Error(ErrorCode::InvalidArgument, "eos token '" + std::string(eos) + "' not in vocabulary");
  }
  eos_ = it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error(ErrorCode::InvalidArgument, "token id out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view token) const {
  if (auto found = find(token)) return *found;
  throw Error(ErrorCode::InvalidArgument, "unknown token '" + std::string(token) + "'");
}

TokenSeq Vocab::encode(std::span<const std::string> symbols) const {
  TokenSeq out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) out.push_back(id(s));
  return out;
}

// ---- TokenDist --------------------------------------------------------------

TokenDist::TokenDist(std::vector<double> log_probs, std::vector<double> probs)
    : log_probs_(std::move(log_probs)), probs_(std::move(probs)) {}

TokenDist TokenDist::from_log_probs(std::vector<double> log_probs) {
  if (log_probs.empty()) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  std::vector<double> probs(log_probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const double lp = log_probs[i];
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::NonFiniteInput, "log-probability is NaN or +inf");
    }
    probs[i] = std::exp(lp);
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::InvariantViolation,
                "probabilities sum to " + std::to_string(total) + ", not 1");
  }
  return TokenDist(std::move(log_probs), std::move(probs));
}

TokenDist TokenDist::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  std::vector<double> log_probs(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw Error(ErrorCode::NonFiniteInput, "probability is negative or not finite");
    }
    log_probs[i] = std::log(probs[i]);
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::InvariantViolation,
                "probabilities sum to " + std::to_string(total) + ", not 1");
  }
  return TokenDist(std::move(log_probs), std::move(probs));
}

TokenDist TokenDist::uniform(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  const double p = 1.0 / static_cast<double>(n);
  return TokenDist(std::vector<double>(n, -std::log(static_cast<double>(n))),
                   std::vector<double>(n, p));
}

TokenDist TokenDist::one_hot(std::size_t n, std::size_t index) {
  if (index >= n) throw Error(ErrorCode::InvalidArgument, "one-hot index out of range");
  std::vector<double> lp(n, -std::numeric_limits<double>::infinity());
  std::vector<double> p(n, 0.0);
  lp[index] = 0.0;
  p[index] = 1.0;
  return TokenDist(std::move(lp), std::move(p));
}

bool TokenDist::has_full_support() const noexcept {
  return std::all_of(log_probs_.begin(), log_probs_.end(),
                     [](double lp) { return std::isfinite(lp); });
}

std::size_t TokenDist::argmax() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < log_probs_.size(); ++i) {
    if (log_probs_[i] > log_probs_[best]) best = i;
  }
  return best;
}

double linf_distance(const TokenDist& a, const TokenDist& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "L-inf of unequal sizes");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.prob(i) - b.prob(i)));
  }
  return worst;
}

// ---- DecodeState ------------------------------------------------------------

DecodeState::DecodeState(std::optional<std::string> evidence_id, TokenSeq prompt, TokenId eos,
                         TokenSeq generated)
    : evidence_id_(std::move(evidence_id)),
      prompt_(std::move(prompt)),
      generated_(std::move(generated)),
      eos_(eos) {
  auto first_eos = std::find(generated_.begin(), generated_.end(), eos_);
  if (first_eos != generated_.end() && first_eos + 1 != generated_.end()) {
    throw Error(ErrorCode::InvariantViolation, "generated sequence continues past eos");
  }
}

DecodeState strip_evidence(const DecodeState& state) {
  return DecodeState(std::nullopt, state.prompt(), state.eos(), state.generated());
}

DecodeState advance(const DecodeState& state, TokenId action) {
  if (state.is_terminal()) {
    throw Error(ErrorCode::AdvancePastTerminal, "state already ended with eos");
  }
  TokenSeq generated = state.generated();
  generated.push_back(action);
  return DecodeState(state.evidence_id(), state.prompt(), state.eos(), std::move(generated));
}

// ---- DecodeLimits -----------------------------------------------------------

void DecodeLimits::validate() const {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (min_length < 0 || min_length > horizon - 1) {
    throw Error(ErrorCode::InvalidArgument, "min_length must be in [0, horizon - 1]");
  }
}

std::vector<TokenId> allowed_actions(const DecodeLimits& limits, std::size_t vocab_size,
                                     TokenId eos, std::size_t step) {
  const auto horizon = static_cast<std::size_t>(limits.horizon);
  if (step + 1 >= horizon) return {eos};
  std::vector<TokenId> out;
  out.reserve(vocab_size);
  const bool eos_allowed = step >= static_cast<std::size_t>(limits.min_length);
  for (TokenId a = 0; a < vocab_size; ++a) {
    if (a != eos || eos_allowed) out.push_back(a);
  }
  return out;
}

// ---- EpisodeTrace -----------------------------------------------------------

TokenSeq EpisodeTrace::output() const {
  TokenSeq out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

double EpisodeTrace::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

void EpisodeTrace::validate(TokenId eos) const {
  if (steps.empty()) throw Error(ErrorCode::InvariantViolation, "episode has no steps");
  if (steps.back().action != eos) throw Error(ErrorCode::InvariantViolation, "last action is not eos");
  if (static_cast<int>(steps.size()) > horizon) {
    throw Error(ErrorCode::InvariantViolation, "episode longer than its horizon");
  }
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    if (steps[i].reward != 0.0) throw Error(ErrorCode::InvariantViolation, "intermediate reward");
  }
  if (terminal_reward != 0 && terminal_reward != 1) {
    throw Error(ErrorCode::InvariantViolation, "terminal reward must be 0 or 1");
  }
  if (steps.back().reward != static_cast<double>(terminal_reward)) {
    throw Error(ErrorCode::InvariantViolation, "last reward differs from terminal reward");
  }
}

// ---- PolicySpec -------------------------------------------------------------

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::temperature: return "temperature";
    case PolicyKind::kl_guided_temperature: return "kl_guided_temperature";
    case PolicyKind::classifier_guidance: return "classifier_guidance";
    case PolicyKind::classifier_free: return "classifier_free";
  }
  return "unknown";
}

std::string_view to_string(HShape shape) noexcept {
  switch (shape) {
    case HShape::exp2: return "exp2";
    case HShape::linear: return "linear";
    case HShape::quadratic: return "quadratic";
  }
  return "unknown";
}

std::string_view to_string(QMode mode) noexcept {
  return mode == QMode::base_rollout ? "base_rollout" : "optimal_backward";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::greedy, PolicyKind::temperature, PolicyKind::kl_guided_temperature,
                 PolicyKind::classifier_guidance, PolicyKind::classifier_free}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown policy kind '" + std::string(name) + "'");
}

HShape parse_h_shape(std::string_view name) {
  for (auto h : {HShape::exp2, HShape::linear, HShape::quadratic}) {
    if (to_string(h) == name) return h;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown h shape '" + std::string(name) + "'");
}

QMode parse_q_mode(std::string_view name) {
  if (name == "base_rollout") return QMode::base_rollout;
  if (name == "optimal_backward") return QMode::optimal_backward;
  throw Error(ErrorCode::InvalidArgument, "unknown q_mode '" + std::string(name) + "'");
}

PolicySpec PolicySpec::with_temperature(double t) {
  PolicySpec s{PolicyKind::temperature};
  s.temperature = t;
  return s;
}

PolicySpec PolicySpec::kl_guided(double sigma, HShape h) {
  PolicySpec s{PolicyKind::kl_guided_temperature};
  s.sigma = sigma;
  s.h = h;
  return s;
}

PolicySpec PolicySpec::classifier_guidance(double lambda, QMode mode) {
  PolicySpec s{PolicyKind::classifier_guidance};
  s.lambda = lambda;
  s.q_mode = mode;
  return s;
}

PolicySpec PolicySpec::classifier_free(double lambda) {
  PolicySpec s{PolicyKind::classifier_free};
  s.lambda = lambda;
  return s;
}

void PolicySpec::validate() const {
  switch (kind) {
    case PolicyKind::greedy:
      break;
    case PolicyKind::temperature:
      if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorCode::NonPositiveTemperature, "temperature must be positive");
      }
      break;
    case PolicyKind::kl_guided_temperature:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
      }
      break;
    case PolicyKind::classifier_guidance:
    case PolicyKind::classifier_free:
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::NegativeLambda, "lambda must be a finite value >= 0");
      }
      break;
  }
}

}  // namespace guidec
