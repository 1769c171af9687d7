#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidec/core.hpp"
#include "guidec/models.hpp"
#include "guidec/oracle.hpp"
#include "guidec/valuation.hpp"

namespace guidec {

struct Scenario {
  std::shared_ptr<const TabularLM> model;
  TokenSeq prompt;
  std::optional<std::string> evidence_id;
  DiscriminatorRule rule = DiscriminatorRule::contains_any({});
  DecodeLimits limits;
  PolicySpec policy;
  std::size_t samples = 1;
  std::uint64_t seed = 0;

  ValuationProblem problem() const;
  void validate() const;
};

// `model` is a path relative to base_dir or an inline model object.
Scenario scenario_from_json(const nlohmann::json& doc,
                            const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json rule_to_json(const DiscriminatorRule& rule, const Vocab& vocab);
DiscriminatorRule rule_from_json(const nlohmann::json& doc, const Vocab& vocab);
nlohmann::json policy_to_json(const PolicySpec& spec);
PolicySpec policy_from_json(const nlohmann::json& doc);

// Decodes episodes for one scenario; value tables are built once when the
// policy needs Q.
class EpisodeRunner {
 public:
  explicit EpisodeRunner(Scenario scenario);

  EpisodeTrace run(std::uint64_t seed) const;
  // Episodes seed, seed + 1, ..., in order.
  std::vector<EpisodeTrace> run_batch(std::uint64_t seed, std::size_t count) const;

  const Scenario& scenario() const noexcept { return scenario_; }
  const ValueTables* tables() const noexcept { return tables_.get(); }

 private:
  Scenario scenario_;
  std::shared_ptr<const ValueTables> tables_;  // stable address for policy_
  StepPolicy policy_;
};

EpisodeTrace run_episode(const Scenario& scenario, std::uint64_t seed);

nlohmann::json trace_to_json(const EpisodeTrace& trace, const Vocab& vocab);

struct MetricsRow {
  std::string policy;
  std::string param;
  double value = 0.0;
  double attribution_rate = 0.0;
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
  double mean_loglik = 0.0;
  double mean_policy_entropy = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

// Throws EmptyTraceSet for no traces. distinct_n counts n-grams over output
// sequences including eos.
MetricsRow compute_metrics(std::span<const EpisodeTrace> traces, const LanguageModel& model);

// Canonical parameter name for sweeps ("lambda", "temperature", "sigma");
// throws UnknownParameter if it does not apply to the policy kind.
std::string sweep_parameter(PolicyKind kind, std::string_view name);
PolicySpec with_parameter(PolicySpec spec, std::string_view name, double value);

// One row per value; the i-th value uses seed = base seed XOR i, and its
// episodes are run_batch(mix64(seed), samples).
std::vector<MetricsRow> sweep(const Scenario& scenario, std::string_view parameter,
                              std::span<const double> values);

std::string metrics_csv_header();
std::string metrics_csv(std::span<const MetricsRow> rows);

enum class VerifySuite { theorems, identities, valuation };
VerifySuite parse_verify_suite(std::string_view name);
std::string_view to_string(VerifySuite suite) noexcept;

struct VerifyConfig {
  int trials = 100;
  int vocab_max = 16;
  double tol = 1e-3;  // L∞ tolerance of closed form vs oracle
  std::uint64_t seed = 20240101;
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

VerifyReport verify(VerifySuite suite, const VerifyConfig& config = {});

}  // namespace guidec
