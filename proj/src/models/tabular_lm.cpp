#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "guidec/infotheory.hpp"
#include "guidec/models.hpp"

namespace guidec {

namespace {

constexpr double kRowSumTolerance = 1e-6;
constexpr double kExactSumTolerance = 1e-9;

TokenDist row_to_dist(const TabularLM::Row& row) {
  double total = 0.0;
  for (double p : row) total += p;
  if (std::abs(total - 1.0) <= kExactSumTolerance) return TokenDist::from_probs(row);
  // Accepted on load within 1e-6; bring it onto the simplex.
  std::vector<double> logs(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) logs[i] = std::log(row[i]);
  return log_normalize(logs);
}

void check_row(const TabularLM::Row& row, std::size_t vocab_size, const std::string& where) {
  if (row.size() != vocab_size) {
    throw Error(ErrorCode::InvariantViolation,
                where + ": row has " + std::to_string(row.size()) + " entries, vocabulary has " +
                    std::to_string(vocab_size));
  }
  double total = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || !(p > 0.0)) {
      throw Error(ErrorCode::InvariantViolation, where + ": row lacks full support");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kRowSumTolerance) {
    throw Error(ErrorCode::InvariantViolation,
                where + ": row sums to " + std::to_string(total));
  }
}

std::string join_context(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

}  // namespace

TabularLM::TabularLM(Vocab vocab, int order, double alpha,
                     std::map<std::string, Table> conditional, Table marginal)
    : vocab_(std::move(vocab)),
      order_(order),
      alpha_(alpha),
      conditional_(std::move(conditional)),
      marginal_(std::move(marginal)) {
  if (order_ < 0 || order_ > kMaxOrder) {
    throw Error(ErrorCode::InvalidArgument, "order must be in [0, 3]");
  }
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  }
  if (vocab_.find(kPadMarker)) {
    throw Error(ErrorCode::InvalidArgument, "'^' is reserved for context padding");
  }
  for (const auto& [evidence, table] : conditional_) {
    auto& dists = conditional_dists_[evidence];
    for (const auto& [ctx, row] : table) {
      check_row(row, vocab_.size(), "conditional[" + evidence + "][" + ctx + "]");
      dists.emplace(ctx, row_to_dist(row));
    }
  }
  for (const auto& [ctx, row] : marginal_) {
    check_row(row, vocab_.size(), "marginal[" + ctx + "]");
    marginal_dists_.emplace(ctx, row_to_dist(row));
  }
}

std::string TabularLM::context_key(const DecodeState& state) const {
  std::vector<std::string> parts;
  parts.reserve(static_cast<std::size_t>(order_));
  const auto& prompt = state.prompt();
  const auto& generated = state.generated();
  const std::size_t total = prompt.size() + generated.size();
  for (int back = order_; back >= 1; --back) {
    const auto b = static_cast<std::size_t>(back);
    if (b > total) {
      parts.emplace_back(kPadMarker);
      continue;
    }
    const std::size_t pos = total - b;
    const TokenId t = pos < prompt.size() ? prompt[pos] : generated[pos - prompt.size()];
    parts.push_back(vocab_.token(t));
  }
  return join_context(parts);
}

TokenDist TabularLM::next_dist(const DecodeState& state) const {
  if (state.is_terminal()) {
    throw Error(ErrorCode::InvalidArgument, "next_dist queried on a terminal state");
  }
  const std::string key = context_key(state);
  const std::map<std::string, TokenDist>* dists = &marginal_dists_;
  if (const auto& evidence = state.evidence_id()) {
    auto it = conditional_dists_.find(*evidence);
    if (it == conditional_dists_.end()) {
      throw Error(ErrorCode::UnknownEvidenceId, "no table for evidence '" + *evidence + "'");
    }
    dists = &it->second;
  }
  auto row = dists->find(key);
  if (row == dists->end()) return TokenDist::uniform(vocab_.size());
  return row->second;
}

TabularLM train_tabular(const Vocab& vocab, std::span<const CorpusEntry> corpus, int order,
                        double alpha) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no sequences");
  if (order < 0 || order > kMaxOrder) throw Error(ErrorCode::InvalidArgument, "order must be in [0, 3]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  }
  const std::size_t v = vocab.size();
  using Counts = std::map<std::string, std::vector<double>>;
  std::map<std::string, Counts> counts;
  std::set<std::string> contexts;

  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& entry = corpus[n];
    const auto& seq = entry.tokens;
    if (seq.empty() || seq.back() != vocab.eos()) {
      throw Error(ErrorCode::SequenceMissingEos,
                  "sequence " + std::to_string(n) + " does not end with eos");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] >= v) throw Error(ErrorCode::InvalidArgument, "token id outside vocabulary");
      if (seq[i] == vocab.eos() && i + 1 != seq.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "sequence " + std::to_string(n) + " continues past eos");
      }
    }
    auto& per_evidence = counts[entry.evidence_id];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      std::vector<std::string> parts;
      for (int back = order; back >= 1; --back) {
        const auto b = static_cast<std::size_t>(back);
        parts.push_back(b > i ? std::string(kPadMarker) : vocab.token(seq[i - b]));
      }
      const std::string key = join_context(parts);
      auto& row = per_evidence[key];
      if (row.empty()) row.assign(v, 0.0);
      row[seq[i]] += 1.0;
      contexts.insert(key);
    }
  }

  const double vd = static_cast<double>(v);
  std::map<std::string, TabularLM::Table> conditional;
  for (const auto& [evidence, table] : counts) {
    auto& out = conditional[evidence];
    for (const auto& [ctx, row] : table) {
      double n_ctx = 0.0;
      for (double c : row) n_ctx += c;
      TabularLM::Row probs(v);
      for (std::size_t a = 0; a < v; ++a) probs[a] = (row[a] + alpha) / (n_ctx + alpha * vd);
      out.emplace(ctx, std::move(probs));
    }
  }

  // Pooled counts with pooled smoothing: the mixture of the conditional rows
  // weighted by their smoothed context mass.
  TabularLM::Table marginal;
  for (const auto& ctx : contexts) {
    std::vector<double> numer(v, 0.0);
    double denom = 0.0;
    for (const auto& [evidence, table] : counts) {
      auto it = table.find(ctx);
      double n_ctx = 0.0;
      for (std::size_t a = 0; a < v; ++a) {
        const double c = it == table.end() ? 0.0 : it->second[a];
        numer[a] += c + alpha;
        n_ctx += c;
      }
      denom += n_ctx + alpha * vd;
    }
    TabularLM::Row probs(v);
    for (std::size_t a = 0; a < v; ++a) probs[a] = numer[a] / denom;
    marginal.emplace(ctx, std::move(probs));
  }

  return TabularLM(vocab, order, alpha, std::move(conditional), std::move(marginal));
}

}  // namespace guidec
