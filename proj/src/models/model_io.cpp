#include <fstream>
#include <sstream>

#include "guidec/models.hpp"

namespace guidec {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedModelFile, what);
}

const json& require(const json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) malformed(std::string("missing field '") + field + "'");
  return *it;
}

TabularLM::Row parse_row(const json& row, const std::string& where) {
  if (!row.is_array()) malformed(where + ": row is not a list");
  TabularLM::Row out;
  out.reserve(row.size());
  for (const auto& v : row) {
    if (!v.is_number()) malformed(where + ": non-numeric probability");
    out.push_back(v.get<double>());
  }
  return out;
}

TabularLM::Table parse_table(const json& doc, const Vocab& vocab, int order,
                             const std::string& where) {
  if (!doc.is_object()) malformed(where + " is not a map");
  TabularLM::Table table;
  for (const auto& [ctx, row] : doc.items()) {
    std::istringstream parts(ctx);
    std::string tok;
    int n = 0;
    while (parts >> tok) {
      if (tok != kPadMarker && !vocab.find(tok)) {
        malformed(where + ": context '" + ctx + "' uses unknown token '" + tok + "'");
      }
      ++n;
    }
    if (n != order) malformed(where + ": context '" + ctx + "' does not have order tokens");
    table.emplace(ctx, parse_row(row, where + "[" + ctx + "]"));
  }
  return table;
}

}  // namespace

json model_to_json(const TabularLM& lm) {
  json doc;
  doc["format"] = "guidec-tabular-lm";
  doc["vocab"] = lm.vocab().tokens();
  doc["eos"] = lm.vocab().token(lm.vocab().eos());
  doc["order"] = lm.order();
  doc["alpha"] = lm.alpha();
  json conditional = json::object();
  for (const auto& [evidence, table] : lm.conditional()) {
    json rows = json::object();
    for (const auto& [ctx, row] : table) rows[ctx] = row;
    conditional[evidence] = std::move(rows);
  }
  doc["conditional"] = std::move(conditional);
  json marginal = json::object();
  for (const auto& [ctx, row] : lm.marginal()) marginal[ctx] = row;
  doc["marginal"] = std::move(marginal);
  return doc;
}

TabularLM model_from_json(const json& doc) {
  if (!doc.is_object()) malformed("model document is not an object");
  const auto& vocab_doc = require(doc, "vocab");
  const auto& eos_doc = require(doc, "eos");
  const auto& order_doc = require(doc, "order");
  const auto& alpha_doc = require(doc, "alpha");
  const auto& cond_doc = require(doc, "conditional");
  const auto& marg_doc = require(doc, "marginal");
  if (!vocab_doc.is_array() || !eos_doc.is_string() || !order_doc.is_number_integer() ||
      !alpha_doc.is_number() || !cond_doc.is_object()) {
    malformed("field has the wrong type");
  }
  std::vector<std::string> tokens;
  for (const auto& t : vocab_doc) {
    if (!t.is_string()) malformed("vocab entry is not a string");
    tokens.push_back(t.get<std::string>());
  }
  std::optional<Vocab> vocab;
  try {
    vocab.emplace(std::move(tokens), eos_doc.get<std::string>());
  } catch (const Error& e) {
    malformed(e.what());
  }
  const int order = order_doc.get<int>();
  std::map<std::string, TabularLM::Table> conditional;
  for (const auto& [evidence, table] : cond_doc.items()) {
    conditional.emplace(evidence,
                        parse_table(table, *vocab, order, "conditional[" + evidence + "]"));
  }
  auto marginal = parse_table(marg_doc, *vocab, order, "marginal");
  return TabularLM(std::move(*vocab), order, alpha_doc.get<double>(), std::move(conditional),
                   std::move(marginal));
}

void save_model(const TabularLM& lm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << model_to_json(lm).dump(2) << '\n';
}

TabularLM load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedModelFile, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    malformed(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

TextCorpus read_text_corpus(std::istream& in, std::string_view eos,
                            const std::vector<std::string>& vocab) {
  struct Line {
    std::string evidence;
    std::vector<std::string> symbols;
  };
  std::vector<Line> lines;
  std::vector<std::string> seen;
  std::string text;
  int number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.empty() || text[0] == '#') continue;
    const auto tab = text.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "corpus line " + std::to_string(number) + " has no tab after the evidence id");
    }
    Line line{text.substr(0, tab), {}};
    std::istringstream symbols(text.substr(tab + 1));
    std::string s;
    while (symbols >> s) {
      if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
      line.symbols.push_back(std::move(s));
    }
    if (line.evidence.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "corpus line " + std::to_string(number) + " has an empty evidence id");
    }
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no sequences");
  std::vector<std::string> tokens = vocab.empty() ? seen : vocab;
  if (std::find(tokens.begin(), tokens.end(), eos) == tokens.end()) tokens.emplace_back(eos);
  TextCorpus corpus{Vocab(std::move(tokens), eos), {}};
  for (const auto& line : lines) {
    corpus.entries.push_back({line.evidence, corpus.vocab.encode(line.symbols)});
  }
  return corpus;
}

TextCorpus read_text_corpus(const std::filesystem::path& path, std::string_view eos,
                            const std::vector<std::string>& vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  return read_text_corpus(in, eos, vocab);
}

}  // namespace guidec
