#include "guidec/instances.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "guidec/infotheory.hpp"

namespace guidec::instances {

double standard_normal(CounterRng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

TokenDist random_dist(CounterRng& rng, std::size_t n, double scale) {
  std::vector<double> logits(n);
  for (auto& x : logits) x = scale * standard_normal(rng);
  return log_normalize(logits);
}

TokenDist random_interior_point(CounterRng& rng, std::size_t n, double floor) {
  const TokenDist base = random_dist(rng, n, 1.0);
  const double keep = 1.0 - floor * static_cast<double>(n);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = floor + keep * base.prob(i);
  return TokenDist::from_probs(std::move(p));
}

std::vector<double> random_q(CounterRng& rng, std::size_t n, double lo) {
  std::vector<double> q(n);
  for (auto& x : q) x = lo + (1.0 - lo) * rng.uniform();
  return q;
}

RandomValuation random_valuation(CounterRng& rng, std::size_t vocab_size, int max_horizon) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i + 1 < vocab_size; ++i) tokens.push_back("t" + std::to_string(i));
  tokens.emplace_back("</s>");
  Vocab vocab(tokens, "</s>");
  const TokenId eos = vocab.eos();
  const auto n_regular = static_cast<std::uint64_t>(vocab_size - 1);
  auto pick = [&] { return static_cast<TokenId>(rng.next() % n_regular); };

  std::vector<CorpusEntry> corpus;
  for (const char* evidence : {"E1", "E2"}) {
    const int sequences = 3 + static_cast<int>(rng.next() % 6);
    for (int s = 0; s < sequences; ++s) {
      TokenSeq seq;
      const int len = static_cast<int>(rng.next() % 4);
      for (int i = 0; i < len; ++i) seq.push_back(pick());
      seq.push_back(eos);
      corpus.push_back({evidence, std::move(seq)});
    }
  }
  const int order = static_cast<int>(rng.next() % 3);
  const double alpha = 0.25 + rng.uniform();
  auto model = std::make_shared<const TabularLM>(train_tabular(vocab, corpus, order, alpha));

  DecodeLimits limits;
  limits.horizon = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_horizon));
  limits.min_length = static_cast<int>(rng.next() % static_cast<std::uint64_t>(limits.horizon));

  std::optional<DiscriminatorRule> rule;
  switch (rng.next() % 3) {
    case 0:
      rule = DiscriminatorRule::contains_token(pick());
      break;
    case 1:
      rule = DiscriminatorRule::contains_any({pick(), pick()});
      break;
    default: {
      std::set<TokenSeq> accepted;
      for (int k = 0; k < 4; ++k) {
        TokenSeq seq;
        const int len = static_cast<int>(rng.next() % static_cast<std::uint64_t>(limits.horizon));
        for (int i = 0; i < len; ++i) seq.push_back(pick());
        seq.push_back(eos);
        accepted.insert(std::move(seq));
      }
      rule = DiscriminatorRule::sequence_in_set(std::move(accepted));
    }
  }
  TokenSeq prompt;
  if (rng.next() % 2) prompt.push_back(pick());
  const char* evidence = rng.next() % 2 ? "E1" : "E2";

  RandomValuation out{model, ValuationProblem{model.get(), *rule, std::string(evidence),
                                              std::move(prompt), limits}};
  return out;
}

RandomValuation two_step_scenario() {
  Vocab vocab({"a", "b", "</s>"}, "</s>");
  const std::vector<CorpusEntry> corpus{{"E1", {0, 1, 2}}};
  auto model = std::make_shared<const TabularLM>(train_tabular(vocab, corpus, 0, 1.0));
  DecodeLimits limits{3, 2};
  RandomValuation out{model, ValuationProblem{model.get(), DiscriminatorRule::contains_token(0),
                                              std::string("E1"), {}, limits}};
  return out;
}

}  // namespace guidec::instances
