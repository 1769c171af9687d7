#include <set>

#include <fmt/format.h>

#include "guidec/harness.hpp"
#include "guidec/infotheory.hpp"
#include "guidec/rng.hpp"

namespace guidec {

MetricsRow compute_metrics(std::span<const EpisodeTrace> traces, const LanguageModel& model) {
  if (traces.empty()) throw Error(ErrorCode::EmptyTraceSet, "no traces to summarize");
  const TokenId eos = model.vocab().eos();

  std::set<TokenSeq> unigrams, bigrams;
  std::size_t n_uni = 0, n_bi = 0, n_steps = 0, n_accepted = 0;
  double loglik = 0.0, ent = 0.0;
  for (const auto& trace : traces) {
    const TokenSeq out = trace.output();
    for (std::size_t i = 0; i < out.size(); ++i) {
      unigrams.insert({out[i]});
      ++n_uni;
      if (i + 1 < out.size()) {
        bigrams.insert({out[i], out[i + 1]});
        ++n_bi;
      }
    }
    for (const auto& step : trace.steps) {
      const DecodeState s(trace.evidence_id, trace.prompt, eos, step.generated);
      loglik += model.next_dist(s).log_prob(step.action);
      ent += entropy(step.policy);
      ++n_steps;
    }
    n_accepted += trace.terminal_reward == 1 ? 1 : 0;
  }

  MetricsRow row;
  row.n_samples = traces.size();
  row.attribution_rate = static_cast<double>(n_accepted) / static_cast<double>(traces.size());
  row.distinct_1 = n_uni ? static_cast<double>(unigrams.size()) / static_cast<double>(n_uni) : 0.0;
  row.distinct_2 = n_bi ? static_cast<double>(bigrams.size()) / static_cast<double>(n_bi) : 0.0;
  row.mean_loglik = n_steps ? loglik / static_cast<double>(n_steps) : 0.0;
  row.mean_policy_entropy = n_steps ? ent / static_cast<double>(n_steps) : 0.0;
  return row;
}

std::string sweep_parameter(PolicyKind kind, std::string_view name) {
  const std::string canon = name == "T" ? "temperature" : name == "λ" ? "lambda" : std::string(name);
  const bool ok = (canon == "lambda" && (kind == PolicyKind::classifier_guidance ||
                                         kind == PolicyKind::classifier_free)) ||
                  (canon == "temperature" && kind == PolicyKind::temperature) ||
                  (canon == "sigma" && kind == PolicyKind::kl_guided_temperature);
  if (!ok) {
    throw Error(ErrorCode::UnknownParameter,
                fmt::format("'{}' is not a parameter of {}", name, to_string(kind)));
  }
  return canon;
}

PolicySpec with_parameter(PolicySpec spec, std::string_view name, double value) {
  const std::string canon = sweep_parameter(spec.kind, name);
  if (canon == "lambda") spec.lambda = value;
  else if (canon == "temperature") spec.temperature = value;
  else spec.sigma = value;
  spec.validate();
  return spec;
}

std::vector<MetricsRow> sweep(const Scenario& scenario, std::string_view parameter,
                              std::span<const double> values) {
  const std::string canon = sweep_parameter(scenario.policy.kind, parameter);
  std::vector<MetricsRow> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    Scenario point = scenario;
    point.policy = with_parameter(scenario.policy, canon, values[i]);
    const std::uint64_t seed = scenario.seed ^ static_cast<std::uint64_t>(i);
    const EpisodeRunner runner(std::move(point));
    // Rows with nearby seeds must not share episode streams.
    const auto traces = runner.run_batch(mix64(seed), scenario.samples);
    MetricsRow row = compute_metrics(traces, *scenario.model);
    row.policy = std::string(to_string(scenario.policy.kind));
    row.param = canon;
    row.value = values[i];
    row.seed = seed;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metrics_csv_header() {
  return "policy,param,value,attribution_rate,distinct_1,distinct_2,mean_loglik,"
         "mean_policy_entropy,n_samples,seed\n";
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = metrics_csv_header();
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{}\n", r.policy,
                       r.param, r.value, r.attribution_rate, r.distinct_1, r.distinct_2,
                       r.mean_loglik, r.mean_policy_entropy, r.n_samples, r.seed);
  }
  return out;
}

}  // namespace guidec
