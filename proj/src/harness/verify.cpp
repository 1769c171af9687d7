#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "guidec/harness.hpp"
#include "guidec/infotheory.hpp"
#include "guidec/instances.hpp"
#include "guidec/objectives.hpp"
#include "guidec/oracle.hpp"
#include "guidec/parallel.hpp"
#include "guidec/policies.hpp"
#include "guidec/rng.hpp"

namespace guidec {

using nlohmann::json;

namespace {

constexpr double kGapTolerance = 1e-6;

// Keeps the running worst case of one check.
struct Tracker {
  Tracker(std::string name, double tolerance) : name(std::move(name)), tolerance(tolerance) {}

  std::string name;
  double tolerance;
  double worst = 0.0;
  std::size_t failures = 0;
  std::size_t cases = 0;
  std::string first_failure;

  void record(double discrepancy, const std::string& where = {}) {
    ++cases;
    if (!(discrepancy <= tolerance)) {  // NaN fails
      if (failures++ == 0) first_failure = where;
    }
    if (std::isnan(discrepancy) || discrepancy > worst) worst = discrepancy;
  }
  void fail(const std::string& where) {
    ++cases;
    if (failures++ == 0) first_failure = where;
  }

  VerifyCheck finish() const {
    std::string detail = fmt::format("{} cases", cases);
    if (failures) detail += fmt::format(", {} failed (first: {})", failures, first_failure);
    return {name, failures == 0 && cases > 0, worst, tolerance, detail};
  }
};

std::size_t pick_dim(CounterRng& rng, int vocab_max) {
  const auto hi = static_cast<std::uint64_t>(std::clamp(vocab_max, 2, static_cast<int>(kMaxVocab)));
  return static_cast<std::size_t>(2 + rng.next() % (hi - 1));
}

constexpr std::array<double, 3> kLambdas{0.25, 1.0, 4.0};
constexpr std::array<double, 3> kTemperatures{0.25, 0.5, 2.0};
constexpr std::array<double, 3> kSigmas{0.5, 1.0, 2.0};
constexpr std::array<HShape, 3> kShapes{HShape::exp2, HShape::linear, HShape::quadratic};

struct Instance {
  PolicySpec spec;
  GuidanceInputs inputs;
  TemperatureForm form = TemperatureForm::entropy;
};

// Draws the instance for one trial of one family.
Instance make_instance(PolicyKind kind, TemperatureForm form, int trial, CounterRng& rng,
                       int vocab_max) {
  const std::size_t n = pick_dim(rng, vocab_max);
  const auto k = static_cast<std::size_t>(trial) % 3;
  Instance inst{PolicySpec{}, GuidanceInputs{instances::random_dist(rng, n), std::nullopt, std::nullopt},
                form};
  switch (kind) {
    case PolicyKind::classifier_guidance: {
      inst.spec = PolicySpec::classifier_guidance(kLambdas[k]);
      const auto q = instances::random_q(rng, n);
      inst.inputs.q_over_v = q_over_v_ratios(q, inst.inputs.p_cond);
      break;
    }
    case PolicyKind::classifier_free:
      inst.spec = PolicySpec::classifier_free(kLambdas[k]);
      inst.inputs.p_uncond = instances::random_dist(rng, n);
      break;
    case PolicyKind::kl_guided_temperature:
      inst.spec = PolicySpec::kl_guided(kSigmas[k], kShapes[(static_cast<std::size_t>(trial) / 3) % 3]);
      inst.inputs.p_uncond = instances::random_dist(rng, n);
      break;
    case PolicyKind::temperature:
      inst.spec = PolicySpec::with_temperature(kTemperatures[k]);
      break;
    case PolicyKind::greedy:
      inst.spec = PolicySpec::greedy();
      break;
  }
  return inst;
}

struct TrialResult {
  double linf = 0.0;
  double gap = 0.0;
  bool argmax_match = true;
};

void certify_family(std::vector<VerifyCheck>& checks, const std::string& label, PolicyKind kind,
                    TemperatureForm form, const VerifyConfig& config, std::uint64_t family) {
  const auto trials = static_cast<std::size_t>(std::max(config.trials, 0));
  std::vector<TrialResult> results(trials);
  parallel_for(trials, [&](std::size_t t) {
    CounterRng rng = CounterRng(config.seed ^ mix64(family)).split(t);
    const Instance inst = make_instance(kind, form, static_cast<int>(t), rng, config.vocab_max);
    const TokenDist closed = apply_policy(inst.spec, inst.inputs);
    const Objective objective = make_objective(inst.spec, inst.inputs, inst.form);
    const OracleResult oracle =
        maximize_exponentiated_gradient(SimplexProblem::from(objective), config.seed + t);
    const double j_closed = objective.value(closed.probs());
    TrialResult r;
    if (kind == PolicyKind::greedy) {
      // The maximizer is a vertex; ascent only approaches it.
      r.argmax_match = oracle.argmax.argmax() == closed.argmax();
      r.gap = std::max(0.0, oracle.value - j_closed);
    } else {
      r.linf = linf_distance(closed, oracle.argmax);
      r.gap = std::abs(j_closed - oracle.value);
    }
    results[t] = r;
  });

  Tracker linf{label + ".linf", config.tol};
  Tracker gap{label + ".objective_gap", kGapTolerance};
  for (std::size_t t = 0; t < trials; ++t) {
    const std::string where = fmt::format("trial {}", t);
    if (kind == PolicyKind::greedy) {
      if (results[t].argmax_match) linf.record(0.0);
      else linf.fail(where + " argmax differs");
    } else {
      linf.record(results[t].linf, where);
    }
    gap.record(results[t].gap, where);
  }
  if (kind == PolicyKind::greedy) linf.name = label + ".argmax";
  checks.push_back(linf.finish());
  checks.push_back(gap.finish());
}

// The lattice scan must never beat the ascent by more than numerical noise.
VerifyCheck grid_agreement(const VerifyConfig& config) {
  Tracker tr{"grid_vs_ascent", 1e-9};
  const std::array<PolicyKind, 4> kinds{PolicyKind::classifier_guidance, PolicyKind::classifier_free,
                                        PolicyKind::kl_guided_temperature, PolicyKind::temperature};
  const int trials = std::min(config.trials, 10);
  for (PolicyKind kind : kinds) {
    for (int t = 0; t < trials; ++t) {
      CounterRng rng = CounterRng(config.seed ^ 0x9e11dULL).split(static_cast<std::uint64_t>(t) * 8 +
                                                                  static_cast<std::uint64_t>(kind));
      const Instance inst = make_instance(kind, TemperatureForm::entropy, t, rng, 3);
      const SimplexProblem problem =
          SimplexProblem::from(make_objective(inst.spec, inst.inputs, inst.form));
      const OracleResult grid = maximize_grid(problem, inst.inputs.p_cond.size() == 2 ? 1e-4 : 2e-3);
      const OracleResult eg = maximize_exponentiated_gradient(problem, config.seed + static_cast<std::uint64_t>(t));
      tr.record(std::max(0.0, grid.value - eg.value),
                fmt::format("{} trial {}", to_string(kind), t));
    }
  }
  return tr.finish();
}

std::vector<VerifyCheck> theorems_suite(const VerifyConfig& config) {
  std::vector<VerifyCheck> checks;
  certify_family(checks, "classifier_guidance", PolicyKind::classifier_guidance,
                 TemperatureForm::entropy, config, 1);
  certify_family(checks, "classifier_free", PolicyKind::classifier_free, TemperatureForm::entropy,
                 config, 2);
  certify_family(checks, "kl_guided_temperature", PolicyKind::kl_guided_temperature,
                 TemperatureForm::entropy, config, 3);
  certify_family(checks, "temperature", PolicyKind::temperature, TemperatureForm::entropy, config, 4);
  certify_family(checks, "temperature_cross_entropy_form", PolicyKind::temperature,
                 TemperatureForm::cross_entropy, config, 4);
  certify_family(checks, "greedy", PolicyKind::greedy, TemperatureForm::entropy, config, 5);
  checks.push_back(grid_agreement(config));
  return checks;
}

// ---- identities -------------------------------------------------------------

constexpr int kIdentityPairs = 1000;

std::vector<VerifyCheck> identities_suite(const VerifyConfig& config) {
  std::vector<VerifyCheck> checks;
  CounterRng root(config.seed ^ 0x1de7ULL);

  Tracker chain{"cross_entropy_chain", 1e-10};
  Tracker kl_nonneg{"kl_nonnegative", 0.0};
  Tracker kl_self{"kl_zero_iff_equal", 0.0};
  for (int i = 0; i < kIdentityPairs; ++i) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(i));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    const TokenDist pi = instances::random_dist(rng, n, 2.0);
    const TokenDist p = instances::random_dist(rng, n, 2.0);
    const std::string where = fmt::format("pair {}", i);
    chain.record(std::abs(cross_entropy(pi, p) - kl_divergence(pi, p) - entropy(pi)), where);
    const double kl = kl_divergence(pi, p);
    kl_nonneg.record(std::max(0.0, -kl), where);
    kl_self.record(std::abs(kl_divergence(pi, pi)), where);
    if (linf_distance(pi, p) > 1e-6 && !(kl > 0.0)) kl_self.fail(where + " KL = 0 for distinct pair");
  }
  checks.push_back(chain.finish());
  checks.push_back(kl_nonneg.finish());
  checks.push_back(kl_self.finish());

  // V only rescales every ratio, so it cancels in the normalization.
  Tracker denom{"classifier_guidance_denominator_invariance", 1e-12};
  for (int i = 0; i < kIdentityPairs; ++i) {
    CounterRng rng = root.split(10000 + static_cast<std::uint64_t>(i));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    const TokenDist p = instances::random_dist(rng, n);
    const auto q = instances::random_q(rng, n);
    const double lambda = kLambdas[static_cast<std::size_t>(i) % 3];
    const auto ratios = q_over_v_ratios(q, p);
    const double scale = 0.01 + 10.0 * rng.uniform();
    std::vector<double> scaled(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) scaled[a] = q[a] * scale;
    const TokenDist ref = classifier_guidance_policy(p, ratios, lambda);
    denom.record(linf_distance(ref, classifier_guidance_policy(p, q, lambda)), fmt::format("case {}", i));
    denom.record(linf_distance(ref, classifier_guidance_policy(p, scaled, lambda)),
                 fmt::format("case {} scaled", i));
  }
  checks.push_back(denom.finish());

  Tracker reductions{"degenerate_reductions", 1e-12};
  Tracker static_lambda{"static_lambda_matches_temperature", 0.0};
  for (int i = 0; i < kIdentityPairs; ++i) {
    CounterRng rng = root.split(20000 + static_cast<std::uint64_t>(i));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    const TokenDist pc = instances::random_dist(rng, n);
    const TokenDist pu = instances::random_dist(rng, n);
    const auto q = instances::random_q(rng, n);
    const std::string where = fmt::format("case {}", i);
    reductions.record(linf_distance(classifier_guidance_policy(pc, q_over_v_ratios(q, pc), 0.0), pc),
                      where + " classifier_guidance");
    reductions.record(linf_distance(classifier_free_policy(pc, pu, 0.0), pc), where + " classifier_free");
    reductions.record(std::abs(dynamic_lambda(kl_divergence(pc, pc), 1.0).lambda), where + " lambda(s,s-)");
    for (HShape h : kShapes) {
      reductions.record(linf_distance(kl_guided_policy(pc, pc, kSigmas[static_cast<std::size_t>(i) % 3], h), pc),
                        where + " kl_guided");
    }
    reductions.record(linf_distance(temperature_policy(pc, 1.0), pc), where + " temperature");

    const double sigma = kSigmas[static_cast<std::size_t>(i) % 3];
    const HShape h = kShapes[static_cast<std::size_t>(i / 3) % 3];
    const DynamicLambda dl = dynamic_lambda(kl_divergence(pc, pu), sigma, h);
    const TokenDist via_kl = kl_guided_policy(pc, pu, sigma, h);
    const TokenDist via_t = temperature_policy(pc, 1.0 / (dl.lambda + 1.0));
    static_lambda.record(linf_distance(via_kl, via_t), where);
  }
  checks.push_back(reductions.finish());
  checks.push_back(static_lambda.finish());

  Tracker greedy_limit{"greedy_limit", 1e-6};
  Tracker argmax_kept{"argmax_preserved", 0.0};
  Tracker entropy_mono{"entropy_monotone_in_temperature", 1e-12};
  constexpr std::array<double, 9> kSweep{1e-4, 0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 10.0, 100.0};
  for (int i = 0; i < kIdentityPairs; ++i) {
    CounterRng rng = root.split(30000 + static_cast<std::uint64_t>(i));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    const TokenDist p = instances::random_dist(rng, n);
    const std::string where = fmt::format("case {}", i);
    std::vector<double> sorted(p.probs().begin(), p.probs().end());
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[0] - sorted[1] >= 0.01) {
      greedy_limit.record(linf_distance(temperature_policy(p, 1e-4), greedy_policy(p)), where);
    }
    double previous = -1.0;
    for (double t : kSweep) {
      const TokenDist pi = temperature_policy(p, t);
      argmax_kept.record(pi.argmax() == p.argmax() ? 0.0 : 1.0, fmt::format("{} T={}", where, t));
      const double h = entropy(pi);
      if (previous >= 0.0) entropy_mono.record(std::max(0.0, previous - h), fmt::format("{} T={}", where, t));
      previous = h;
    }
  }
  checks.push_back(greedy_limit.finish());
  checks.push_back(argmax_kept.finish());
  checks.push_back(entropy_mono.finish());

  Tracker shift{"log_normalize_shift_invariance", 1e-12};
  for (int i = 0; i < kIdentityPairs; ++i) {
    CounterRng rng = root.split(40000 + static_cast<std::uint64_t>(i));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    std::vector<double> w(n), shifted(n);
    const double c = 200.0 * (rng.uniform() - 0.5);
    for (std::size_t a = 0; a < n; ++a) {
      w[a] = 3.0 * instances::standard_normal(rng);
      shifted[a] = w[a] + c;
    }
    shift.record(linf_distance(log_normalize(w), log_normalize(shifted)), fmt::format("case {}", i));
  }
  checks.push_back(shift.finish());

  // Analytic vs finite-difference gradients of every objective.
  Tracker grads{"objective_gradients", 1e-5};
  constexpr int kPoints = 20;
  struct Family {
    const char* name;
    PolicyKind kind;
    TemperatureForm form;
  };
  constexpr std::array<Family, 6> kFamilies{{
      {"classifier_guidance", PolicyKind::classifier_guidance, TemperatureForm::entropy},
      {"classifier_free", PolicyKind::classifier_free, TemperatureForm::entropy},
      {"kl_guided_temperature", PolicyKind::kl_guided_temperature, TemperatureForm::entropy},
      {"temperature", PolicyKind::temperature, TemperatureForm::entropy},
      {"temperature_cross_entropy", PolicyKind::temperature, TemperatureForm::cross_entropy},
      {"greedy", PolicyKind::greedy, TemperatureForm::entropy},
  }};
  for (std::size_t f = 0; f < kFamilies.size(); ++f) {
    for (int k = 0; k < kPoints; ++k) {
      CounterRng rng = root.split(50000 + f * 1000 + static_cast<std::uint64_t>(k));
      const Instance inst = make_instance(kFamilies[f].kind, kFamilies[f].form, k, rng, config.vocab_max);
      const SimplexProblem problem =
          SimplexProblem::from(make_objective(inst.spec, inst.inputs, inst.form));
      const TokenDist point = instances::random_interior_point(rng, problem.dimension, 1e-3);
      grads.record(gradient_check(problem, point), fmt::format("{} point {}", kFamilies[f].name, k));
    }
  }
  for (int k = 0; k < kPoints; ++k) {
    CounterRng rng = root.split(60000 + static_cast<std::uint64_t>(k));
    const std::size_t n = pick_dim(rng, config.vocab_max);
    const TokenDist p = instances::random_dist(rng, n);
    const TokenDist stripped = instances::random_dist(rng, n);
    const SimplexProblem problem = SimplexProblem::from(
        self_referential_objective(p, stripped, kLambdas[static_cast<std::size_t>(k) % 3]));
    const TokenDist point = instances::random_interior_point(rng, n, 1e-3);
    grads.record(gradient_check(problem, point), fmt::format("self_referential point {}", k));
  }
  checks.push_back(grads.finish());
  return checks;
}

// ---- valuation --------------------------------------------------------------

constexpr double kExactTolerance = 1e-12;
constexpr double kBellman = 1e-9;
constexpr int kMaxValuationVocab = 6;
constexpr int kMaxValuationHorizon = 5;

// Compares tables against forward enumeration: V at every stored state, and
// Q(s, a) against the enumerated value of the child (or D at a leaf).
void check_tables(const ValuationProblem& problem, const ValueTables& tables, Tracker& v_err,
                  Tracker& q_err, Tracker& bellman, const std::string& where) {
  const auto exact = enumerate_values(problem, tables);
  const TokenId eos = problem.lm->vocab().eos();
  for (const auto& [generated, node] : tables.nodes) {
    v_err.record(std::abs(node.v - exact.at(generated)), where);
    double sum = 0.0;
    for (std::size_t i = 0; i < node.actions.size(); ++i) {
      TokenSeq child = generated;
      child.push_back(node.actions[i]);
      const double expected = node.actions[i] == eos
                                  ? static_cast<double>(problem.rule.accepts(child))
                                  : exact.at(child);
      q_err.record(std::abs(node.q[i] - expected), where);
      sum += node.policy.prob(node.actions[i]) * node.q[i];
    }
    bellman.record(std::abs(node.v - sum), where);
  }
}

std::vector<VerifyCheck> valuation_suite(const VerifyConfig& config) {
  Tracker v_err{"backward_induction_v_vs_enumeration", kExactTolerance};
  Tracker q_err{"backward_induction_q_vs_enumeration", kExactTolerance};
  Tracker bellman{"bellman_consistency", kBellman};
  Tracker improve{"guided_rollout_monotone_improvement", kExactTolerance};
  const int vocab_hi = std::clamp(config.vocab_max, 2, kMaxValuationVocab);
  const int trials = std::max(config.trials, 0);
  CounterRng root(config.seed ^ 0x7a1eULL);
  for (int t = 0; t < trials; ++t) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(t));
    const auto vocab_size = static_cast<std::size_t>(2 + rng.next() % static_cast<std::uint64_t>(vocab_hi - 1));
    const auto inst = instances::random_valuation(rng, vocab_size, kMaxValuationHorizon);
    const std::string where = fmt::format("scenario {}", t);

    const ValueTables base = backward_induction(inst.problem);
    check_tables(inst.problem, base, v_err, q_err, bellman, where + " base");

    const ValueTables* previous = &base;
    std::vector<ValueTables> guided;
    guided.reserve(kLambdas.size());
    for (double lambda : kLambdas) {
      guided.push_back(backward_induction(
          inst.problem, PolicySpec::classifier_guidance(lambda, QMode::optimal_backward)));
      const ValueTables& cur = guided.back();
      const std::string w = fmt::format("{} lambda={}", where, lambda);
      check_tables(inst.problem, cur, v_err, q_err, bellman, w);
      for (const auto& [generated, node] : cur.nodes) {
        improve.record(std::max(0.0, previous->v(generated) - node.v), w);
      }
      previous = &cur;
    }
  }

  Tracker two_step{"two_step_exact_values", kExactTolerance};
  {
    const auto inst = instances::two_step_scenario();
    const ValueTables tables = backward_induction(inst.problem);
    const TokenId a = 0, b = 1;
    two_step.record(std::abs(tables.root_value() - 0.75), "V(root)");
    two_step.record(std::abs(tables.q({}, a) - 1.0), "Q(root, a)");
    two_step.record(std::abs(tables.q({}, b) - 0.5), "Q(root, b)");
    if (tables.at({}).actions != std::vector<TokenId>{a, b}) two_step.fail("eos allowed at root");
  }
  return {v_err.finish(), q_err.finish(), bellman.finish(), improve.finish(), two_step.finish()};
}

}  // namespace

VerifySuite parse_verify_suite(std::string_view name) {
  if (name == "theorems") return VerifySuite::theorems;
  if (name == "identities") return VerifySuite::identities;
  if (name == "valuation") return VerifySuite::valuation;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown suite '{}'", name));
}

std::string_view to_string(VerifySuite suite) noexcept {
  switch (suite) {
    case VerifySuite::theorems: return "theorems";
    case VerifySuite::identities: return "identities";
    case VerifySuite::valuation: return "valuation";
  }
  return "unknown";
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

json VerifyReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"worst", std::isfinite(c.worst) ? json(c.worst) : json(fmt::format("{}", c.worst))},
                    {"tolerance", c.tolerance},
                    {"detail", c.detail}});
  }
  return {{"suite", suite}, {"passed", passed()}, {"checks", std::move(list)}};
}

VerifyReport verify(VerifySuite suite, const VerifyConfig& config) {
  VerifyReport report{std::string(to_string(suite)), {}};
  try {
    switch (suite) {
      case VerifySuite::theorems: report.checks = theorems_suite(config); break;
      case VerifySuite::identities: report.checks = identities_suite(config); break;
      case VerifySuite::valuation: report.checks = valuation_suite(config); break;
    }
  } catch (const std::exception& e) {
    report.checks.push_back({"suite_completed", false, 0.0, 0.0, e.what()});
  }
  return report;
}

}  // namespace guidec
