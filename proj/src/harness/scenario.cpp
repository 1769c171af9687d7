#include <cmath>
#include <fstream>

#include "guidec/harness.hpp"

namespace guidec {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    invalid(std::string("field '") + key + "' has the wrong type");
  }
}

TokenSeq encode_list(const json& list, const Vocab& vocab, const std::string& where) {
  if (!list.is_array()) invalid(where + " must be a list of tokens");
  TokenSeq out;
  for (const auto& t : list) {
    if (!t.is_string()) invalid(where + " must contain token strings");
    auto id = vocab.find(t.get<std::string>());
    if (!id) invalid(where + ": unknown token '" + t.get<std::string>() + "'");
    out.push_back(*id);
  }
  return out;
}

json decode_list(std::span<const TokenId> seq, const Vocab& vocab) {
  json out = json::array();
  for (TokenId t : seq) out.push_back(vocab.token(t));
  return out;
}

}  // namespace

json policy_to_json(const PolicySpec& spec) {
  json doc{{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case PolicyKind::greedy: break;
    case PolicyKind::temperature: doc["temperature"] = spec.temperature; break;
    case PolicyKind::kl_guided_temperature:
      doc["sigma"] = spec.sigma;
      doc["h"] = to_string(spec.h);
      break;
    case PolicyKind::classifier_guidance:
      doc["lambda"] = spec.lambda;
      doc["q_mode"] = to_string(spec.q_mode);
      break;
    case PolicyKind::classifier_free: doc["lambda"] = spec.lambda; break;
  }
  return doc;
}

PolicySpec policy_from_json(const json& doc) {
  if (!doc.is_object()) invalid("policy must be an object");
  PolicySpec spec;
  try {
    spec.kind = parse_policy_kind(get_or<std::string>(doc, "kind", ""));
    spec.h = parse_h_shape(get_or<std::string>(doc, "h", "exp2"));
    spec.q_mode = parse_q_mode(get_or<std::string>(doc, "q_mode", "base_rollout"));
    spec.lambda = get_or<double>(doc, "lambda", 1.0);
    spec.temperature = get_or<double>(doc, "temperature", 1.0);
    spec.sigma = get_or<double>(doc, "sigma", 1.0);
    spec.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    invalid(e.what());
  }
  return spec;
}

json rule_to_json(const DiscriminatorRule& rule, const Vocab& vocab) {
  json doc{{"kind", to_string(rule.kind())}};
  if (rule.kind() == DiscriminatorRule::Kind::sequence_in_set) {
    json seqs = json::array();
    for (const auto& s : rule.sequences()) seqs.push_back(decode_list(s, vocab));
    doc["tokens"] = std::move(seqs);
  } else {
    const TokenSeq tokens(rule.tokens().begin(), rule.tokens().end());
    doc["tokens"] = decode_list(tokens, vocab);
  }
  return doc;
}

DiscriminatorRule rule_from_json(const json& doc, const Vocab& vocab) {
  if (!doc.is_object()) invalid("rule must be an object");
  const std::string kind = get_or<std::string>(doc, "kind", "");
  auto it = doc.find("tokens");
  if (it == doc.end()) invalid("rule needs 'tokens'");
  if (kind == "contains_token") {
    const json& t = *it;
    const json list = t.is_string() ? json::array({t}) : t;
    const TokenSeq ids = encode_list(list, vocab, "rule.tokens");
    if (ids.size() != 1) invalid("contains_token takes exactly one token");
    return DiscriminatorRule::contains_token(ids.front());
  }
  if (kind == "contains_any") {
    const TokenSeq ids = encode_list(*it, vocab, "rule.tokens");
    return DiscriminatorRule::contains_any({ids.begin(), ids.end()});
  }
  if (kind == "sequence_in_set") {
    if (!it->is_array()) invalid("sequence_in_set takes a list of token lists");
    std::set<TokenSeq> seqs;
    for (const auto& s : *it) {
      TokenSeq ids = encode_list(s, vocab, "rule.tokens[]");
      if (ids.empty() || ids.back() != vocab.eos()) invalid("accepted sequences must end with eos");
      seqs.insert(std::move(ids));
    }
    return DiscriminatorRule::sequence_in_set(std::move(seqs));
  }
  invalid("unknown rule kind '" + kind + "'");
}

ValuationProblem Scenario::problem() const {
  return ValuationProblem{model.get(), rule, evidence_id, prompt, limits};
}

void Scenario::validate() const {
  if (!model) invalid("scenario has no model");
  limits.validate();
  policy.validate();
  const auto& vocab = model->vocab();
  for (TokenId t : prompt) {
    if (t >= vocab.size() || t == vocab.eos()) invalid("prompt token outside vocabulary or eos");
  }
  if (std::pow(static_cast<double>(vocab.size()), limits.horizon) > kMaxEnumeratedStates) {
    invalid("horizon exceeds the valuation guard (|vocab|^horizon <= 1e7)");
  }
  if (evidence_id && !model->conditional().contains(*evidence_id)) {
    throw Error(ErrorCode::UnknownEvidenceId, "no table for evidence '" + *evidence_id + "'");
  }
  if (samples == 0) invalid("samples must be >= 1");
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) invalid("scenario must be an object");
  Scenario s;
  auto model = doc.find("model");
  if (model == doc.end()) invalid("scenario needs 'model'");
  if (model->is_string()) {
    std::filesystem::path path = model->get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    s.model = std::make_shared<const TabularLM>(load_model(path));
  } else {
    s.model = std::make_shared<const TabularLM>(model_from_json(*model));
  }
  const Vocab& vocab = s.model->vocab();
  if (auto p = doc.find("prompt"); p != doc.end()) s.prompt = encode_list(*p, vocab, "prompt");
  if (auto e = doc.find("evidence"); e != doc.end() && !e->is_null()) {
    if (!e->is_string()) invalid("evidence must be a string or null");
    s.evidence_id = e->get<std::string>();
  }
  auto rule = doc.find("rule");
  if (rule == doc.end()) invalid("scenario needs 'rule'");
  s.rule = rule_from_json(*rule, vocab);
  s.limits.horizon = get_or<int>(doc, "horizon", 0);
  s.limits.min_length = get_or<int>(doc, "min_length", 0);
  auto policy = doc.find("policy");
  if (policy == doc.end()) invalid("scenario needs 'policy'");
  s.policy = policy_from_json(*policy);
  const auto samples = get_or<std::int64_t>(doc, "samples", 1);
  if (samples < 1) invalid("samples must be >= 1");
  s.samples = static_cast<std::size_t>(samples);
  s.seed = get_or<std::uint64_t>(doc, "seed", 0);
  try {
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario || e.code() == ErrorCode::UnknownEvidenceId) throw;
    invalid(e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return scenario_from_json(doc, path.parent_path());
}

}  // namespace guidec
