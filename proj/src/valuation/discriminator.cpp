#include <algorithm>

#include "guidec/valuation.hpp"

namespace guidec {

DiscriminatorRule::DiscriminatorRule(Kind kind, std::set<TokenId> tokens,
                                     std::set<TokenSeq> sequences)
    : kind_(kind), tokens_(std::move(tokens)), sequences_(std::move(sequences)) {}

DiscriminatorRule DiscriminatorRule::contains_token(TokenId token) {
  return DiscriminatorRule(Kind::contains_token, {token}, {});
}

DiscriminatorRule DiscriminatorRule::contains_any(std::set<TokenId> tokens) {
  return DiscriminatorRule(Kind::contains_any, std::move(tokens), {});
}

DiscriminatorRule DiscriminatorRule::sequence_in_set(std::set<TokenSeq> sequences) {
  return DiscriminatorRule(Kind::sequence_in_set, {}, std::move(sequences));
}

bool DiscriminatorRule::accepts(std::span<const TokenId> sequence) const {
  switch (kind_) {
    case Kind::contains_token:
    case Kind::contains_any:
      return std::any_of(sequence.begin(), sequence.end(),
                         [&](TokenId t) { return tokens_.contains(t); });
    case Kind::sequence_in_set:
      return sequences_.contains(TokenSeq(sequence.begin(), sequence.end()));
  }
  return false;
}

std::string_view to_string(DiscriminatorRule::Kind kind) noexcept {
  switch (kind) {
    case DiscriminatorRule::Kind::contains_token: return "contains_token";
    case DiscriminatorRule::Kind::contains_any: return "contains_any";
    case DiscriminatorRule::Kind::sequence_in_set: return "sequence_in_set";
  }
  return "unknown";
}

int discriminate(const DiscriminatorRule& rule, std::span<const TokenId> terminal_sequence,
                 TokenId eos) {
  if (terminal_sequence.empty() || terminal_sequence.back() != eos) {
    throw Error(ErrorCode::NonTerminalSequence, "sequence does not end with eos");
  }
  return rule.accepts(terminal_sequence) ? 1 : 0;
}

}  // namespace guidec
