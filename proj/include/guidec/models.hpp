#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidec/core.hpp"

namespace guidec {

// Source of the anchor distribution P_G(.|s). Implementations must return
// full-support distributions.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocab& vocab() const = 0;
  virtual TokenDist next_dist(const DecodeState& state) const = 0;
};

struct CorpusEntry {
  std::string evidence_id;
  TokenSeq tokens;
};

inline constexpr int kMaxOrder = 3;
inline constexpr std::string_view kPadMarker = "^";

// Order-k Markov model with add-alpha smoothing. One table per evidence id
// serves P_G(.|s); the pooled table serves P_G(.|s-). Rows are stored as
// probabilities; contexts missing from a table map to uniform.
class TabularLM : public LanguageModel {
 public:
  using Row = std::vector<double>;
  using Table = std::map<std::string, Row>;

  TabularLM(Vocab vocab, int order, double alpha, std::map<std::string, Table> conditional,
            Table marginal);

  const Vocab& vocab() const override { return vocab_; }
  TokenDist next_dist(const DecodeState& state) const override;

  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  const std::map<std::string, Table>& conditional() const noexcept { return conditional_; }
  const Table& marginal() const noexcept { return marginal_; }

  // Space-joined last `order` tokens of prompt + generated, left-padded with "^".
  std::string context_key(const DecodeState& state) const;

 private:
  Vocab vocab_;
  int order_;
  double alpha_;
  std::map<std::string, Table> conditional_;
  Table marginal_;
  std::map<std::string, std::map<std::string, TokenDist>> conditional_dists_;
  std::map<std::string, TokenDist> marginal_dists_;
};

TabularLM train_tabular(const Vocab& vocab, std::span<const CorpusEntry> corpus, int order,
                        double alpha);

nlohmann::json model_to_json(const TabularLM& lm);
TabularLM model_from_json(const nlohmann::json& doc);
void save_model(const TabularLM& lm, const std::filesystem::path& path);
TabularLM load_model(const std::filesystem::path& path);

struct TextCorpus {
  Vocab vocab;
  std::vector<CorpusEntry> entries;
};

// One sequence per line: "<evidence_id>\t<tokens separated by spaces>".
// Lines starting with '#' and blank lines are skipped. Without an explicit
// vocabulary the symbols are taken in order of first appearance.
TextCorpus read_text_corpus(std::istream& in, std::string_view eos,
                            const std::vector<std::string>& vocab = {});
TextCorpus read_text_corpus(const std::filesystem::path& path, std::string_view eos,
                            const std::vector<std::string>& vocab = {});

}  // namespace guidec
